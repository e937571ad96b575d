// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "panosphere/geometry.hpp"

namespace ps {
namespace {

constexpr double kL1DeadZone = 1e-12;
constexpr double kDegenerateCross = 1e-20;

double pairwise_sum_impl(const double* p, long n) {
  if (n <= 8) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const long half = n / 2;
  return pairwise_sum_impl(p, half) + pairwise_sum_impl(p + half, n - half);
}

std::vector<std::pair<double, long>> gather_valid(const GridD& values,
                                                  const GridD& valid) {
  std::vector<std::pair<double, long>> out;
  out.reserve(values.size());
  const double* v = values.data();
  const double* m = valid.data();
  for (long i = 0; i < values.size(); ++i)
    if (m[i] != 0.0) out.emplace_back(v[i], i);
  return out;
}

double l1_sign(double r) {
  if (std::abs(r) < kL1DeadZone) return 0.0;
  return r > 0.0 ? 1.0 : -1.0;
}

GridD ones_like(const GridD& g) { return GridD::Ones(g.rows(), g.cols()); }

GridD mask_or_ones(const ErpRaster& ref, const ErpRaster* mask) {
  if (!mask) return GridD::Ones(ref.height, ref.width);
  return raster_to_grid(*mask);
}

// sin(theta) at pixel centers, strictly positive away from exact poles
Eigen::VectorXd latitude_weights(long rows) {
  Eigen::VectorXd w(rows);
  for (long v = 0; v < rows; ++v) w[v] = std::sin(kPi * (v + 0.5) / rows);
  return w;
}

double masked_mean(const GridD& values, const GridD& valid,
                   bool latitude_weighted) {
  Eigen::VectorXd acc(values.size());
  Eigen::VectorXd wacc(values.size());
  long n = 0;
  const Eigen::VectorXd lat =
      latitude_weighted ? latitude_weights(values.rows()) : Eigen::VectorXd();
  for (long u = 0; u < values.cols(); ++u)
    for (long v = 0; v < values.rows(); ++v)
      if (valid(v, u) != 0.0) {
        const double w = latitude_weighted ? lat[v] : 1.0;
        acc[n] = w * values(v, u);
        wacc[n] = w;
        ++n;
      }
  if (n == 0) throw AlignmentError("empty valid set");
  return pairwise_sum_impl(acc.data(), n) / pairwise_sum_impl(wacc.data(), n);
}

}  // namespace

double pairwise_sum(const Eigen::VectorXd& values) {
  return pairwise_sum_impl(values.data(), values.size());
}

GridD raster_to_grid(const ErpRaster& r, int channel) {
  GridD g(r.height, r.width);
  for (int v = 0; v < r.height; ++v)
    for (int u = 0; u < r.width; ++u) g(v, u) = r.at(u, v, channel);
  return g;
}

ErpRaster grid_to_raster(const GridD& g, RasterKind kind) {
  ErpRaster r(static_cast<int>(g.cols()), static_cast<int>(g.rows()), 1, kind);
  for (int v = 0; v < r.height; ++v)
    for (int u = 0; u < r.width; ++u) r.at(u, v) = static_cast<float>(g(v, u));
  return r;
}

DirectionGrid build_direction_grid(const ErpGrid& g) {
  DirectionGrid d;
  d.x.resize(g.height_px, g.width_px);
  d.y.resize(g.height_px, g.width_px);
  d.z.resize(g.height_px, g.width_px);
  for (int v = 0; v < g.height_px; ++v)
    for (int u = 0; u < g.width_px; ++u) {
      const Eigen::Vector3d r = angles_to_direction(erp_pixel_to_angles(u, v, g));
      d.x(v, u) = r.x();
      d.y(v, u) = r.y();
      d.z(v, u) = r.z();
    }
  return d;
}

double masked_median(const GridD& values, const GridD& valid) {
  auto items = gather_valid(values, valid);
  if (items.empty()) throw AlignmentError("masked_median: empty valid set");
  std::sort(items.begin(), items.end());
  const size_t n = items.size();
  if (n % 2 == 1) return items[n / 2].first;
  return 0.5 * (items[n / 2 - 1].first + items[n / 2].first);
}

GridD masked_median_weights(const GridD& values, const GridD& valid) {
  auto items = gather_valid(values, valid);
  if (items.empty()) throw AlignmentError("masked_median: empty valid set");
  std::sort(items.begin(), items.end());
  GridD w = GridD::Zero(values.rows(), values.cols());
  const size_t n = items.size();
  if (n % 2 == 1) {
    w.data()[items[n / 2].second] = 1.0;
  } else {
    w.data()[items[n / 2 - 1].second] += 0.5;
    w.data()[items[n / 2].second] += 0.5;
  }
  return w;
}

GridD median_align(const GridD& pred, const GridD& gt, const GridD& valid) {
  const double mp = masked_median(pred, valid);
  const double mg = masked_median(gt, valid);
  if (!(mp > 0.0)) throw AlignmentError("median_align: nonpositive pred median");
  if (!(mg > 0.0)) throw AlignmentError("median_align: nonpositive gt median");
  return pred * (mg / mp);
}

AffineFit affine_fit(const GridD& pred, const GridD& gt, const GridD& valid) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (long u = 0; u < pred.cols(); ++u)
    for (long v = 0; v < pred.rows(); ++v)
      if (valid(v, u) != 0.0) {
        const double x = pred(v, u), y = gt(v, u);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
      }
  if (n < 2) throw AlignmentError("affine_fit: fewer than 2 valid pixels");
  const double det = n * sxx - sx * sx;
  if (std::abs(det) <= 1e-12 * std::max(1.0, n * sxx))
    throw AlignmentError("affine_fit: constant prediction, normal equations singular");
  const double a = (n * sxy - sx * sy) / det;
  const double b = (sxx * sy - sx * sxy) / det;
  if (a == 0.0) throw AlignmentError("affine_fit: zero scale");
  return {a, b / a};
}

GridD affine_align(const GridD& pred, const GridD& gt, const GridD& valid) {
  const AffineFit f = affine_fit(pred, gt, valid);
  return f.scale * (pred + f.shift);
}

NormalGrid distance_to_normal(const GridD& dist, const GridD& valid_in,
                              const DirectionGrid& dirs) {
  const long h = dist.rows(), w = dist.cols();
  NormalGrid out;
  out.nx = GridD::Zero(h, w);
  out.ny = GridD::Zero(h, w);
  out.nz = GridD::Zero(h, w);
  out.valid = GridD::Zero(h, w);

  auto lift = [&](long v, long u) {
    return Eigen::Vector3d(dist(v, u) * dirs.x(v, u), dist(v, u) * dirs.y(v, u),
                           dist(v, u) * dirs.z(v, u));
  };

  for (long v = 0; v < h; ++v) {
    const long vu = std::max(v - 1, 0L), vd = std::min(v + 1, h - 1);
    for (long u = 0; u < w; ++u) {
      const long ul = (u - 1 + w) % w, ur = (u + 1) % w;
      if (valid_in(v, u) == 0.0 || valid_in(v, ul) == 0.0 ||
          valid_in(v, ur) == 0.0 || valid_in(vu, u) == 0.0 ||
          valid_in(vd, u) == 0.0)
        continue;
      const Eigen::Vector3d tu = lift(v, ur) - lift(v, ul);
      const Eigen::Vector3d tv = lift(vd, u) - lift(vu, u);
      const Eigen::Vector3d raw = tu.cross(tv);
      const double nrm = raw.norm();
      if (nrm < kDegenerateCross) continue;
      Eigen::Vector3d n = raw / nrm;
      if (n.dot(lift(v, u)) > 0.0) n = -n;  // face the origin
      out.nx(v, u) = n.x();
      out.ny(v, u) = n.y();
      out.nz(v, u) = n.z();
      out.valid(v, u) = 1.0;
    }
  }
  return out;
}

GridD distance_to_normal_backward(const GridD& dist, const NormalGrid& fwd,
                                  const DirectionGrid& dirs, const GridD& gnx,
                                  const GridD& gny, const GridD& gnz) {
  const long h = dist.rows(), w = dist.cols();
  GridD grad = GridD::Zero(h, w);

  auto dir = [&](long v, long u) {
    return Eigen::Vector3d(dirs.x(v, u), dirs.y(v, u), dirs.z(v, u));
  };
  auto lift = [&](long v, long u) {
    return Eigen::Vector3d(dist(v, u) * dir(v, u));
  };

  for (long v = 0; v < h; ++v) {
    const long vu = std::max(v - 1, 0L), vd = std::min(v + 1, h - 1);
    for (long u = 0; u < w; ++u) {
      if (fwd.valid(v, u) == 0.0) continue;
      const long ul = (u - 1 + w) % w, ur = (u + 1) % w;

      const Eigen::Vector3d tu = lift(v, ur) - lift(v, ul);
      const Eigen::Vector3d tv = lift(vd, u) - lift(vu, u);
      const Eigen::Vector3d raw = tu.cross(tv);
      const double nrm = raw.norm();
      if (nrm < kDegenerateCross) continue;
      const Eigen::Vector3d nn = raw / nrm;
      const double flip = nn.dot(lift(v, u)) > 0.0 ? -1.0 : 1.0;

      const Eigen::Vector3d gn(flip * gnx(v, u), flip * gny(v, u),
                               flip * gnz(v, u));
      const Eigen::Vector3d graw = (gn - nn * nn.dot(gn)) / nrm;
      const Eigen::Vector3d gtu = tv.cross(graw);
      const Eigen::Vector3d gtv = graw.cross(tu);

      grad(v, ur) += dir(v, ur).dot(gtu);
      grad(v, ul) -= dir(v, ul).dot(gtu);
      grad(vd, u) += dir(vd, u).dot(gtv);
      grad(vu, u) -= dir(vu, u).dot(gtv);
    }
  }
  return grad;
}

double loss_dis(const GridD& pred_aligned, const GridD& gt, const GridD& valid,
                bool latitude_weighted) {
  return masked_mean((pred_aligned - gt).abs(), valid, latitude_weighted);
}

double loss_nor(const NormalGrid& pred_n, const NormalGrid& gt_n,
                bool latitude_weighted) {
  const GridD both = pred_n.valid * gt_n.valid;
  const GridD diff = (pred_n.nx - gt_n.nx).abs() + (pred_n.ny - gt_n.ny).abs() +
                     (pred_n.nz - gt_n.nz).abs();
  return masked_mean(diff, both, latitude_weighted);
}

TotalLoss total_loss(const GridD& pred, const GridD& gt, const GridD& valid,
                     const LossWeights& w, const DirectionGrid& dirs,
                     const NormalGrid* gt_normals) {
  if (w.lambda_dis == 0.0 && w.lambda_nor == 0.0)
    throw ConfigError("total_loss: both loss weights are zero");
  const GridD pred_med = median_align(pred, gt, valid);
  TotalLoss out;
  out.dis = loss_dis(pred_med, gt, valid);
  const NormalGrid pred_n = distance_to_normal(pred_med, valid, dirs);
  const NormalGrid gt_n =
      gt_normals ? *gt_normals : distance_to_normal(gt, valid, dirs);
  out.nor = loss_nor(pred_n, gt_n);
  out.total = w.lambda_dis * out.dis + w.lambda_nor * out.nor;
  return out;
}

TotalLossGrad total_loss_grad(const GridD& pred, const GridD& gt,
                              const GridD& valid, const LossWeights& w,
                              const DirectionGrid& dirs,
                              const NormalGrid* gt_normals) {
  const double mp = masked_median(pred, valid);
  const double mg = masked_median(gt, valid);
  if (!(mp > 0.0) || !(mg > 0.0))
    throw AlignmentError("total_loss_grad: nonpositive median");
  const double scale = mg / mp;
  const GridD pred_med = pred * scale;

  TotalLossGrad out;
  const long n_dis = static_cast<long>((valid != 0.0).count());
  if (n_dis == 0) throw AlignmentError("total_loss_grad: empty valid set");

  out.loss.dis = loss_dis(pred_med, gt, valid);

  // dL_dis / dpred_med
  GridD g_med = GridD::Zero(pred.rows(), pred.cols());
  for (long u = 0; u < pred.cols(); ++u)
    for (long v = 0; v < pred.rows(); ++v)
      if (valid(v, u) != 0.0)
        g_med(v, u) =
            w.lambda_dis * l1_sign(pred_med(v, u) - gt(v, u)) / n_dis;

  // dL_nor / dpred_med via D2N
  const NormalGrid pred_n = distance_to_normal(pred_med, valid, dirs);
  const NormalGrid gt_n =
      gt_normals ? *gt_normals : distance_to_normal(gt, valid, dirs);
  out.loss.nor = loss_nor(pred_n, gt_n);

  const GridD both = pred_n.valid * gt_n.valid;
  const double n_nor = both.sum();
  GridD gnx = GridD::Zero(pred.rows(), pred.cols());
  GridD gny = gnx, gnz = gnx;
  for (long u = 0; u < pred.cols(); ++u)
    for (long v = 0; v < pred.rows(); ++v)
      if (both(v, u) != 0.0) {
        gnx(v, u) = l1_sign(pred_n.nx(v, u) - gt_n.nx(v, u)) / n_nor;
        gny(v, u) = l1_sign(pred_n.ny(v, u) - gt_n.ny(v, u)) / n_nor;
        gnz(v, u) = l1_sign(pred_n.nz(v, u) - gt_n.nz(v, u)) / n_nor;
      }
  // restrict upstream grads to pixels counted in the loss before backprop
  g_med += w.lambda_nor *
           distance_to_normal_backward(pred_med, pred_n, dirs, gnx, gny, gnz);

  out.loss.total = w.lambda_dis * out.loss.dis + w.lambda_nor * out.loss.nor;

  // chain through the median scale: d(scale)/dpred_q = -mg/mp^2 * w_med_q
  const double coupled = (g_med * pred).sum();
  const GridD w_med = masked_median_weights(pred, valid);
  out.grad = scale * g_med + coupled * (-mg / (mp * mp)) * w_med;
  return out;
}

// --- raster-level wrappers ---------------------------------------------------

ErpRaster median_align(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask) {
  const GridD aligned = median_align(raster_to_grid(pred), raster_to_grid(gt),
                                     mask_or_ones(pred, mask));
  return grid_to_raster(aligned, RasterKind::Distance);
}

ErpRaster affine_align(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask) {
  const GridD aligned = affine_align(raster_to_grid(pred), raster_to_grid(gt),
                                     mask_or_ones(pred, mask));
  return grid_to_raster(aligned, RasterKind::Distance);
}

NormalRaster distance_to_normal(const ErpRaster& dist, const ErpRaster* mask) {
  const DirectionGrid dirs = build_direction_grid(dist.grid());
  const NormalGrid n =
      distance_to_normal(raster_to_grid(dist), mask_or_ones(dist, mask), dirs);
  NormalRaster out;
  out.normals = ErpRaster(dist.width, dist.height, 3, RasterKind::Normal);
  out.valid = grid_to_raster(n.valid, RasterKind::Mask);
  for (int v = 0; v < dist.height; ++v)
    for (int u = 0; u < dist.width; ++u) {
      out.normals.at(u, v, 0) = static_cast<float>(n.nx(v, u));
      out.normals.at(u, v, 1) = static_cast<float>(n.ny(v, u));
      out.normals.at(u, v, 2) = static_cast<float>(n.nz(v, u));
    }
  return out;
}

double loss_dis(const ErpRaster& pred_aligned, const ErpRaster& gt,
                const ErpRaster* mask, bool latitude_weighted) {
  return loss_dis(raster_to_grid(pred_aligned), raster_to_grid(gt),
                  mask_or_ones(gt, mask), latitude_weighted);
}

double loss_nor(const ErpRaster& pred_normals, const ErpRaster& gt_normals,
                const ErpRaster* mask, bool latitude_weighted) {
  const GridD valid = mask_or_ones(pred_normals, mask);
  NormalGrid a, b;
  a.nx = raster_to_grid(pred_normals, 0);
  a.ny = raster_to_grid(pred_normals, 1);
  a.nz = raster_to_grid(pred_normals, 2);
  a.valid = valid;
  b.nx = raster_to_grid(gt_normals, 0);
  b.ny = raster_to_grid(gt_normals, 1);
  b.nz = raster_to_grid(gt_normals, 2);
  b.valid = valid;
  return loss_nor(a, b, latitude_weighted);
}

TotalLoss total_loss(const ErpRaster& pred, const ErpRaster& gt,
                     const ErpRaster* mask, const LossWeights& w,
                     const ErpRaster* gt_normals) {
  const DirectionGrid dirs = build_direction_grid(pred.grid());
  const GridD valid = mask_or_ones(pred, mask);
  if (gt_normals) {
    NormalGrid gn;
    gn.nx = raster_to_grid(*gt_normals, 0);
    gn.ny = raster_to_grid(*gt_normals, 1);
    gn.nz = raster_to_grid(*gt_normals, 2);
    gn.valid = valid;
    return total_loss(raster_to_grid(pred), raster_to_grid(gt), valid, w, dirs,
                      &gn);
  }
  return total_loss(raster_to_grid(pred), raster_to_grid(gt), valid, w, dirs);
}

}  // namespace ps
