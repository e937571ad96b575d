// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/projection.hpp"

#include <cmath>

namespace ps {
namespace {

inline int wrap_index(long i, int n) {
  long m = i % n;
  if (m < 0) m += n;
  return static_cast<int>(m);
}

// Maps an ERP pixel into the source frame of `cam` with the azimuth offset
// already reduced by `phi_residual` (see p2e below). Returns false when the
// direction falls outside the frustum.
struct FrustumMapper {
  const PerspectiveCamera& cam;
  ErpGrid grid;
  double fx, fy;
  double phi_residual;

  FrustumMapper(const PerspectiveCamera& c, const ErpGrid& g, double phi_res)
      : cam(c), grid(g), phi_residual(phi_res) {
    const Eigen::Vector2d f = focal_lengths(cam);
    fx = f.x();
    fy = f.y();
  }

  bool map(int u_res, int v, double& xs, double& ys) const {
    const SphericalAngle ang = erp_pixel_to_angles(u_res, v, grid);
    const double phi_rel = ang.azimuth_rad - phi_residual;
    const double theta_rel = ang.polar_rad - cam.center_polar_rad;
    if (theta_rel <= 0.0 || theta_rel >= kPi) return false;
    const Eigen::Vector3d d = angles_to_direction({phi_rel, theta_rel});
    if (d.z() <= 0.0) return false;
    xs = d.x() / d.z() * fx + (cam.width_px - 1) / 2.0;
    ys = d.y() / d.z() * fy + (cam.height_px - 1) / 2.0;
    return xs >= 0.0 && xs <= cam.width_px - 1 && ys >= 0.0 &&
           ys <= cam.height_px - 1;
  }
};

// Splits the azimuth offset into a whole number of ERP columns plus a
// sub-column residual. Rolling by whole columns afterwards makes a shift of
// phi_c by exactly k*(2pi/W) a bit-exact k-column rotation of the output.
void split_azimuth_offset(double phi_c, int w, long& k, double& residual) {
  const double cols = phi_c * w / kTwoPi;
  k = std::llround(cols);
  residual = phi_c - k * (kTwoPi / w);
}

}  // namespace

float bilinear_sample(const Raster& r, double x, double y, int c) {
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, r.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, r.height - 1);
  const int x1 = std::min(x0 + 1, r.width - 1);
  const int y1 = std::min(y0 + 1, r.height - 1);
  const double tx = std::clamp(x - x0, 0.0, 1.0);
  const double ty = std::clamp(y - y0, 0.0, 1.0);
  const double top = (1.0 - tx) * r.at(x0, y0, c) + tx * r.at(x1, y0, c);
  const double bot = (1.0 - tx) * r.at(x0, y1, c) + tx * r.at(x1, y1, c);
  return static_cast<float>((1.0 - ty) * top + ty * bot);
}

float erp_bilinear_sample(const ErpRaster& r, double u, double v, int c) {
  const int u0 = static_cast<int>(std::floor(u));
  const int ua = wrap_index(u0, r.width);
  const int ub = wrap_index(u0 + 1, r.width);
  const int v0 = std::clamp(static_cast<int>(std::floor(v)), 0, r.height - 1);
  const int v1 = std::min(v0 + 1, r.height - 1);
  const double tu = u - u0;
  const double tv = std::clamp(v - v0, 0.0, 1.0);
  const double top = (1.0 - tu) * r.at(ua, v0, c) + tu * r.at(ub, v0, c);
  const double bot = (1.0 - tu) * r.at(ua, v1, c) + tu * r.at(ub, v1, c);
  return static_cast<float>((1.0 - tv) * top + tv * bot);
}

ProjectionResult p2e_project(const PerspectiveRaster& src, const ErpGrid& grid,
                             SampleMode mode) {
  src.validate();
  grid.validate();

  long roll;
  double phi_res;
  split_azimuth_offset(src.cam.center_azimuth_rad, grid.width_px, roll, phi_res);
  const FrustumMapper mapper(src.cam, grid, phi_res);

  ErpRaster erp(grid.width_px, grid.height_px, src.img.channels, src.img.kind);
  ErpRaster mask = make_erp(grid, RasterKind::Mask);

  for (int v = 0; v < grid.height_px; ++v) {
    for (int u = 0; u < grid.width_px; ++u) {
      const int u_res = wrap_index(u - roll, grid.width_px);
      double xs, ys;
      if (!mapper.map(u_res, v, xs, ys)) continue;
      mask.at(u, v) = 1.0f;
      if (mode == SampleMode::Bilinear) {
        for (int c = 0; c < src.img.channels; ++c)
          erp.at(u, v, c) = bilinear_sample(src.img, xs, ys, c);
      } else {
        const int xn = static_cast<int>(std::lround(xs));
        const int yn = static_cast<int>(std::lround(ys));
        for (int c = 0; c < src.img.channels; ++c)
          erp.at(u, v, c) = src.img.at(xn, yn, c);
      }
    }
  }
  return {std::move(erp), std::move(mask)};
}

ProjectionResult p2e_project_depth(const PerspectiveRaster& src_depth,
                                   const ErpGrid& grid, bool src_is_distance) {
  src_depth.validate();
  grid.validate();
  if (src_depth.img.channels != 1)
    throw DomainError("p2e_project_depth: depth raster must have 1 channel");
  if ((src_depth.img.data <= 0.0f).any())
    throw DomainError("p2e_project_depth: nonpositive depth in source");

  long roll;
  double phi_res;
  split_azimuth_offset(src_depth.cam.center_azimuth_rad, grid.width_px, roll,
                       phi_res);
  const FrustumMapper mapper(src_depth.cam, grid, phi_res);

  ErpRaster dist = make_erp(grid, RasterKind::Distance);
  ErpRaster mask = make_erp(grid, RasterKind::Mask);
  const double cx = (src_depth.cam.width_px - 1) / 2.0;
  const double cy = (src_depth.cam.height_px - 1) / 2.0;

  for (int v = 0; v < grid.height_px; ++v) {
    for (int u = 0; u < grid.width_px; ++u) {
      const int u_res = wrap_index(u - roll, grid.width_px);
      double xs, ys;
      if (!mapper.map(u_res, v, xs, ys)) continue;
      // nearest-neighbor: depth values must not be mixed across edges
      const int xn = static_cast<int>(std::lround(xs));
      const int yn = static_cast<int>(std::lround(ys));
      const double z = src_depth.img.at(xn, yn);
      double value = z;
      if (!src_is_distance) {
        const double dx = (xn - cx) / mapper.fx;
        const double dy = (yn - cy) / mapper.fy;
        value = z * std::sqrt(dx * dx + dy * dy + 1.0);
      }
      dist.at(u, v) = static_cast<float>(value);
      mask.at(u, v) = 1.0f;
    }
  }
  return {std::move(dist), std::move(mask)};
}

PerspectiveRaster e2p_sample(const ErpRaster& src, const PerspectiveCamera& cam) {
  src.validate();
  cam.validate();
  const ErpGrid grid = src.grid();
  const bool nearest =
      src.kind == RasterKind::Distance || src.kind == RasterKind::Mask;

  PerspectiveRaster out;
  out.cam = cam;
  out.img = Raster(cam.width_px, cam.height_px, src.channels, src.kind);

  for (int y = 0; y < cam.height_px; ++y) {
    for (int x = 0; x < cam.width_px; ++x) {
      const Eigen::Vector3d d = pixel_ray(cam, x, y);
      const SphericalAngle ang = ray_to_angles(d, cam);
      const Eigen::Vector2d uv = angles_to_erp_pixel(ang, grid);
      if (nearest) {
        const int un = wrap_index(std::lround(uv.x()), grid.width_px);
        const int vn = std::clamp(static_cast<int>(std::lround(uv.y())), 0,
                                  grid.height_px - 1);
        for (int c = 0; c < src.channels; ++c)
          out.img.at(x, y, c) = src.at(un, vn, c);
      } else {
        for (int c = 0; c < src.channels; ++c)
          out.img.at(x, y, c) = erp_bilinear_sample(src, uv.x(), uv.y(), c);
      }
    }
  }
  return out;
}

}  // namespace ps
