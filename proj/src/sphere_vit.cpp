// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/sphere_vit.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace ps {
namespace {

double softplus(double t) {
  if (t > 30.0) return t;
  if (t < -30.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd a(s.rows(), s.cols());
  for (long r = 0; r < s.rows(); ++r) {
    const double m = s.row(r).maxCoeff();
    a.row(r) = (s.row(r).array() - m).exp();
    a.row(r) /= a.row(r).sum();
  }
  return a;
}

int wrap_i(long i, int n) {
  long m = i % n;
  if (m < 0) m += n;
  return static_cast<int>(m);
}

// Bilinear patch-grid -> pixel-grid upsampling; u wraps, v clamps. patch i
// is anchored at pixel i*P + (P-1)/2.
GridD upsample_bilinear(const GridD& patch_vals, int patch, int h, int w) {
  const int gh = static_cast<int>(patch_vals.rows());
  const int gw = static_cast<int>(patch_vals.cols());
  GridD out(h, w);
  for (int y = 0; y < h; ++y) {
    const double gy = std::clamp((y - (patch - 1) / 2.0) / patch, 0.0,
                                 static_cast<double>(gh - 1));
    const int j0 = std::min(static_cast<int>(std::floor(gy)), gh - 1);
    const int j1 = std::min(j0 + 1, gh - 1);
    const double ty = gy - j0;
    for (int x = 0; x < w; ++x) {
      const double gx = (x - (patch - 1) / 2.0) / patch;
      const int i0f = static_cast<int>(std::floor(gx));
      const int i0 = wrap_i(i0f, gw), i1 = wrap_i(i0f + 1, gw);
      const double tx = gx - i0f;
      out(y, x) = (1 - ty) * ((1 - tx) * patch_vals(j0, i0) + tx * patch_vals(j0, i1)) +
                  ty * ((1 - tx) * patch_vals(j1, i0) + tx * patch_vals(j1, i1));
    }
  }
  return out;
}

GridD upsample_backward(const GridD& dpred, int patch, int gh, int gw) {
  const int h = static_cast<int>(dpred.rows());
  const int w = static_cast<int>(dpred.cols());
  GridD dpatch = GridD::Zero(gh, gw);
  for (int y = 0; y < h; ++y) {
    const double gy = std::clamp((y - (patch - 1) / 2.0) / patch, 0.0,
                                 static_cast<double>(gh - 1));
    const int j0 = std::min(static_cast<int>(std::floor(gy)), gh - 1);
    const int j1 = std::min(j0 + 1, gh - 1);
    const double ty = gy - j0;
    for (int x = 0; x < w; ++x) {
      const double gx = (x - (patch - 1) / 2.0) / patch;
      const int i0f = static_cast<int>(std::floor(gx));
      const int i0 = wrap_i(i0f, gw), i1 = wrap_i(i0f + 1, gw);
      const double tx = gx - i0f;
      const double g = dpred(y, x);
      dpatch(j0, i0) += (1 - ty) * (1 - tx) * g;
      dpatch(j0, i1) += (1 - ty) * tx * g;
      dpatch(j1, i0) += ty * (1 - tx) * g;
      dpatch(j1, i1) += ty * tx * g;
    }
  }
  return dpatch;
}

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  void fill(Eigen::MatrixXd& m, long fan_in, long fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (long c = 0; c < m.cols(); ++c)
      for (long r = 0; r < m.rows(); ++r) m(r, c) = u(rng_);
  }
  void fill(Eigen::VectorXd& v, long fan_in, long fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (long r = 0; r < v.size(); ++r) v[r] = u(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

struct ParamView {
  std::string group;
  double* data;
  long size;
};

std::vector<ParamView> param_views(ToyAttentionParams& p) {
  std::vector<ParamView> out;
  out.push_back({"patch_w", p.patch_w.data(), p.patch_w.size()});
  out.push_back({"patch_b", p.patch_b.data(), p.patch_b.size()});
  for (size_t i = 0; i < p.linear.size(); ++i) {
    const std::string tag = "linear" + std::to_string(i);
    out.push_back({tag + ".w", p.linear[i].w.data(), p.linear[i].w.size()});
    out.push_back({tag + ".b", p.linear[i].b.data(), p.linear[i].b.size()});
  }
  for (size_t i = 0; i < p.cross.size(); ++i) {
    const std::string tag = "cross" + std::to_string(i);
    out.push_back({tag + ".wq", p.cross[i].wq.data(), p.cross[i].wq.size()});
    out.push_back({tag + ".wk", p.cross[i].wk.data(), p.cross[i].wk.size()});
    out.push_back({tag + ".wv", p.cross[i].wv.data(), p.cross[i].wv.size()});
    out.push_back({tag + ".wo", p.cross[i].wo.data(), p.cross[i].wo.size()});
  }
  out.push_back({"head_w", p.head_w.data(), p.head_w.size()});
  out.push_back({"head_b", &p.head_b, 1});
  return out;
}

}  // namespace

ImageD raster_to_image(const ErpRaster& r) {
  ImageD img;
  img.reserve(r.channels);
  for (int c = 0; c < r.channels; ++c) img.push_back(raster_to_grid(r, c));
  return img;
}

Eigen::MatrixXd extract_patches(const ImageD& img, int patch) {
  if (img.empty()) throw ConfigError("patchify: no channels");
  const int h = static_cast<int>(img[0].rows());
  const int iw = static_cast<int>(img[0].cols());
  const int c = static_cast<int>(img.size());
  if (h % patch != 0 || iw % patch != 0)
    throw ConfigError("patchify: image dims must be divisible by patch size");
  const int gh = h / patch, gw = iw / patch;
  const long flat = static_cast<long>(patch) * patch * c;

  Eigen::MatrixXd tokens(static_cast<long>(gh) * gw, flat);
  for (int j = 0; j < gh; ++j)
    for (int i = 0; i < gw; ++i) {
      const long n = static_cast<long>(j) * gw + i;
      long k = 0;
      for (int py = 0; py < patch; ++py)
        for (int px = 0; px < patch; ++px)
          for (int ch = 0; ch < c; ++ch)
            tokens(n, k++) = img[ch](j * patch + py, i * patch + px);
    }
  return tokens;
}

Eigen::MatrixXd patchify(const ImageD& img, int patch,
                         const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd tokens = extract_patches(img, patch);
  if (w.rows() != tokens.cols())
    throw ConfigError("patchify: projection rows must equal P*P*C");
  return (tokens * w).rowwise() + b.transpose();
}

Eigen::MatrixXd sphere_cross_attention(const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& e,
                                       const Eigen::MatrixXd& wq,
                                       const Eigen::MatrixXd& wk,
                                       const Eigen::MatrixXd& wv) {
  if (z.rows() != e.rows() || z.cols() != e.cols())
    throw ConfigError("sphere_cross_attention: Z and E shapes disagree");
  if (wq.rows() != z.cols() || wk.rows() != z.cols() || wv.rows() != z.cols())
    throw ConfigError("sphere_cross_attention: projection shape mismatch");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  const Eigen::MatrixXd s = (z * wq) * (e * wk).transpose() * inv_sqrt_dk;
  return softmax_rows(s) * (e * wv);
}

std::uint64_t matrix_checksum(const Eigen::MatrixXd& m) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const size_t n = static_cast<size_t>(m.size()) * sizeof(double);
  std::uint64_t h = 14695981039346656037ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

SphereVit::SphereVit(const VitConfig& cfg, int img_h, int img_w, int channels)
    : cfg_(cfg), img_h_(img_h), img_w_(img_w), channels_(channels) {
  if (cfg.dim % 4 != 0) throw ConfigError("SphereVit: D must be divisible by 4");
  if (cfg.dim_k < 1) throw ConfigError("SphereVit: D_k must be >= 1");
  if (img_h % cfg.patch != 0 || img_w % cfg.patch != 0)
    throw ConfigError("SphereVit: image dims must be divisible by patch size");
  grid_h_ = img_h / cfg.patch;
  grid_w_ = img_w / cfg.patch;
  emb_ = build_sphere_embedding(grid_h_, grid_w_, cfg.dim);

  const long flat = static_cast<long>(cfg.patch) * cfg.patch * channels;
  Initializer init(cfg.seed);
  p_.patch_w.resize(flat, cfg.dim);
  init.fill(p_.patch_w, flat, cfg.dim);
  p_.patch_b = Eigen::VectorXd::Zero(cfg.dim);
  p_.linear.resize(cfg.linear_blocks);
  for (auto& blk : p_.linear) {
    blk.w.resize(cfg.dim, cfg.dim);
    init.fill(blk.w, cfg.dim, cfg.dim);
    blk.b = Eigen::VectorXd::Zero(cfg.dim);
  }
  p_.cross.resize(cfg.cross_blocks);
  for (auto& blk : p_.cross) {
    blk.wq.resize(cfg.dim, cfg.dim_k);
    blk.wk.resize(cfg.dim, cfg.dim_k);
    blk.wv.resize(cfg.dim, cfg.dim_k);
    blk.wo.resize(cfg.dim_k, cfg.dim);
    init.fill(blk.wq, cfg.dim, cfg.dim_k);
    init.fill(blk.wk, cfg.dim, cfg.dim_k);
    init.fill(blk.wv, cfg.dim, cfg.dim_k);
    init.fill(blk.wo, cfg.dim_k, cfg.dim);
  }
  p_.head_w.resize(cfg.dim);
  init.fill(p_.head_w, cfg.dim, 1);
  p_.head_b = 0.0;
}

GridD SphereVit::forward(const ImageD& img, ForwardCache* cache) const {
  if (static_cast<int>(img.size()) != channels_)
    throw ConfigError("SphereVit::forward: channel count mismatch");
  const Eigen::MatrixXd tokens = extract_patches(img, cfg_.patch);
  Eigen::MatrixXd z =
      (tokens * p_.patch_w).rowwise() + p_.patch_b.transpose();

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.tokens = tokens;
  c.z.clear();
  c.lin_t.clear();
  c.attn_a.clear();
  c.attn_o.clear();

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.dim_k));
  for (const auto& blk : p_.linear) {
    c.z.push_back(z);
    const Eigen::MatrixXd t =
        ((z * blk.w).rowwise() + blk.b.transpose()).array().tanh();
    c.lin_t.push_back(t);
    z += t;
  }
  for (const auto& blk : p_.cross) {
    c.z.push_back(z);
    const Eigen::MatrixXd k = emb_.rows * blk.wk;
    const Eigen::MatrixXd v = emb_.rows * blk.wv;
    const Eigen::MatrixXd a =
        softmax_rows((z * blk.wq) * k.transpose() * inv_sqrt_dk);
    const Eigen::MatrixXd o = a * v;
    c.attn_a.push_back(a);
    c.attn_o.push_back(o);
    z += o * blk.wo;
  }
  c.z_final = z;
  c.head_pre = z * p_.head_w + Eigen::VectorXd::Constant(z.rows(), p_.head_b);

  c.patch_vals.resize(grid_h_, grid_w_);
  for (int j = 0; j < grid_h_; ++j)
    for (int i = 0; i < grid_w_; ++i)
      c.patch_vals(j, i) = softplus(c.head_pre[static_cast<long>(j) * grid_w_ + i]);

  c.pred = upsample_bilinear(c.patch_vals, cfg_.patch, img_h_, img_w_);
  return c.pred;
}

ErpRaster SphereVit::forward(const ErpRaster& img) const {
  const GridD pred = forward(raster_to_image(img));
  return grid_to_raster(pred, RasterKind::Distance);
}

Gradients SphereVit::backward(const ForwardCache& c, const GridD& dpred) const {
  Gradients g;
  g.p.patch_w = Eigen::MatrixXd::Zero(p_.patch_w.rows(), p_.patch_w.cols());
  g.p.patch_b = Eigen::VectorXd::Zero(p_.patch_b.size());
  g.p.linear.resize(p_.linear.size());
  g.p.cross.resize(p_.cross.size());
  g.p.head_w = Eigen::VectorXd::Zero(p_.head_w.size());
  g.p.head_b = 0.0;

  const GridD dpatch = upsample_backward(dpred, cfg_.patch, grid_h_, grid_w_);

  Eigen::VectorXd dhead_pre(c.head_pre.size());
  for (int j = 0; j < grid_h_; ++j)
    for (int i = 0; i < grid_w_; ++i) {
      const long n = static_cast<long>(j) * grid_w_ + i;
      dhead_pre[n] = dpatch(j, i) * sigmoid(c.head_pre[n]);
    }

  g.p.head_w = c.z_final.transpose() * dhead_pre;
  g.p.head_b = dhead_pre.sum();
  Eigen::MatrixXd dz = dhead_pre * p_.head_w.transpose();

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.dim_k));
  const size_t nl = p_.linear.size();
  for (long bi = static_cast<long>(p_.cross.size()) - 1; bi >= 0; --bi) {
    const auto& blk = p_.cross[bi];
    const Eigen::MatrixXd& zin = c.z[nl + bi];
    const Eigen::MatrixXd& a = c.attn_a[bi];
    const Eigen::MatrixXd& o = c.attn_o[bi];
    const Eigen::MatrixXd k = emb_.rows * blk.wk;
    const Eigen::MatrixXd v = emb_.rows * blk.wv;

    auto& gb = g.p.cross[bi];
    gb.wo = o.transpose() * dz;
    const Eigen::MatrixXd d_o = dz * blk.wo.transpose();
    const Eigen::MatrixXd da = d_o * v.transpose();
    const Eigen::MatrixXd dv = a.transpose() * d_o;
    gb.wv = emb_.rows.transpose() * dv;

    Eigen::MatrixXd ds(a.rows(), a.cols());
    for (long r = 0; r < a.rows(); ++r) {
      const double dot = a.row(r).dot(da.row(r));
      ds.row(r) = (a.row(r).array() * (da.row(r).array() - dot)).matrix() *
                  inv_sqrt_dk;
    }
    const Eigen::MatrixXd dq = ds * k;
    const Eigen::MatrixXd dk = ds.transpose() * (zin * blk.wq);
    gb.wq = zin.transpose() * dq;
    gb.wk = emb_.rows.transpose() * dk;
    dz += dq * blk.wq.transpose();
  }
  for (long bi = static_cast<long>(nl) - 1; bi >= 0; --bi) {
    const auto& blk = p_.linear[bi];
    const Eigen::MatrixXd& zin = c.z[bi];
    const Eigen::MatrixXd& t = c.lin_t[bi];
    const Eigen::MatrixXd dh =
        dz.array() * (1.0 - t.array().square());
    g.p.linear[bi].w = zin.transpose() * dh.matrix();
    g.p.linear[bi].b = dh.matrix().colwise().sum().transpose();
    dz += dh.matrix() * blk.w.transpose();
  }

  g.p.patch_w = c.tokens.transpose() * dz;
  g.p.patch_b = dz.colwise().sum().transpose();
  return g;
}

void SphereVit::apply_sgd(const Gradients& g, double lr) {
  Gradients& gm = const_cast<Gradients&>(g);
  auto pv = param_views(p_);
  auto gv = param_views(gm.p);
  for (size_t i = 0; i < pv.size(); ++i)
    for (long k = 0; k < pv[i].size; ++k) pv[i].data[k] -= lr * gv[i].data[k];
}

GradCheckReport gradient_check(const VitConfig& cfg, int img_h, int img_w,
                               int channels, double eps, double tol) {
  SphereVit model(cfg, img_h, img_w, channels);

  // smooth synthetic input and strictly positive target
  ImageD img;
  for (int ch = 0; ch < channels; ++ch) {
    GridD plane(img_h, img_w);
    for (int y = 0; y < img_h; ++y)
      for (int x = 0; x < img_w; ++x)
        plane(y, x) = 0.5 + 0.4 * std::sin(kTwoPi * (x + 1.0) / img_w + ch) *
                                std::cos(kPi * y / img_h);
    img.push_back(plane);
  }
  GridD gt(img_h, img_w);
  for (int y = 0; y < img_h; ++y)
    for (int x = 0; x < img_w; ++x)
      gt(y, x) = 1.5 + 0.4 * std::sin(kTwoPi * x / img_w) *
                           std::sin(kPi * (y + 0.5) / img_h);
  const GridD valid = GridD::Ones(img_h, img_w);
  const DirectionGrid dirs = build_direction_grid({img_w, img_h});

  // analytic gradients
  ForwardCache cache;
  const GridD pred = model.forward(img, &cache);
  const TotalLossGrad tlg =
      total_loss_grad(pred, gt, valid, cfg.weights, dirs);
  Gradients analytic = model.backward(cache, tlg.grad);

  auto loss_at = [&]() {
    const GridD p = model.forward(img);
    return total_loss(p, gt, valid, cfg.weights, dirs).total;
  };

  GradCheckReport report;
  report.eps = eps;
  report.tol = tol;
  auto pv = param_views(model.params());
  auto gv = param_views(analytic.p);
  for (size_t gi = 0; gi < pv.size(); ++gi) {
    GradCheckEntry entry;
    entry.group = pv[gi].group;
    for (long k = 0; k < pv[gi].size; ++k) {
      double& theta = pv[gi].data[k];
      const double saved = theta;
      theta = saved + eps;
      const double lp = loss_at();
      theta = saved - eps;
      const double lm = loss_at();
      theta = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double a = gv[gi].data[k];
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        entry.max_rel_err = std::numeric_limits<double>::infinity();
        break;
      }
      const double denom = std::max(std::abs(a), std::abs(numeric));
      if (denom < 1e-10) continue;
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a - numeric) / denom);
    }
    entry.pass = entry.max_rel_err <= tol;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(entry);
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

TrainResult train_sgd(SphereVit& model, const ImageD& img, const GridD& gt,
                      const GridD& valid, int steps, double lr) {
  const DirectionGrid dirs =
      build_direction_grid({static_cast<int>(gt.cols()), static_cast<int>(gt.rows())});
  TrainResult result;
  for (int step = 0; step < steps; ++step) {
    ForwardCache cache;
    const GridD pred = model.forward(img, &cache);
    const TotalLossGrad tlg =
        total_loss_grad(pred, gt, valid, model.config().weights, dirs);
    result.losses.push_back(tlg.loss.total);
    const Gradients g = model.backward(cache, tlg.grad);
    model.apply_sgd(g, lr);
  }
  const GridD pred = model.forward(img);
  result.losses.push_back(
      total_loss(pred, gt, valid, model.config().weights, dirs).total);
  return result;
}

}  // namespace ps
