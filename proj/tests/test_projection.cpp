// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "panosphere/projection.hpp"

using namespace ps;

namespace {

PerspectiveRaster smooth_gradient(int n, double xfov) {
  PerspectiveRaster src;
  src.cam = PerspectiveCamera::with_default_yfov(n, n, xfov);
  src.img = Raster(n, n, 1, RasterKind::Rgb);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      src.img.at(x, y) = static_cast<float>(
          0.5 + 0.25 * std::sin(2.0 * kPi * x / n) +
          0.25 * std::cos(2.0 * kPi * y / n));
  return src;
}

double psnr_inside(const Raster& a, const Raster& b, const Raster& keep) {
  double se = 0.0;
  long n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (keep.at(x, y) == 0.0f) continue;
      const double d = a.at(x, y) - b.at(x, y);
      se += d * d;
      ++n;
    }
  return -10.0 * std::log10(se / n);  // peak value 1
}

}  // namespace

TEST_CASE("bilinear sampling is exact on affine images") {
  Raster r(6, 5, 1, RasterKind::Rgb);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) r.at(x, y) = 0.5f + 0.25f * x - 0.125f * y;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 5.0), uy(0.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double x = ux(rng), y = uy(rng);
    CHECK(bilinear_sample(r, x, y, 0) ==
          doctest::Approx(0.5 + 0.25 * x - 0.125 * y).epsilon(1e-6));
  }
}

TEST_CASE("erp bilinear wraps the azimuth seam") {
  Raster r(4, 2, 1, RasterKind::Rgb);
  r.at(0, 0) = 1.0f;
  r.at(3, 0) = 3.0f;
  // u = 3.5 interpolates columns 3 and 0
  CHECK(erp_bilinear_sample(r, 3.5, 0.0, 0) == doctest::Approx(2.0));
  CHECK(erp_bilinear_sample(r, -0.5, 0.0, 0) == doctest::Approx(2.0));
}

TEST_CASE("constant image round trip") {
  PerspectiveRaster src;
  src.cam = PerspectiveCamera::with_default_yfov(64, 64, kPi / 2.0);
  src.img = Raster(64, 64, 1, RasterKind::Rgb);
  src.img.data.setConstant(0.75f);

  const ProjectionResult res = p2e_project(src, {256, 128});
  CHECK(res.mask.data.sum() > 0.0f);
  for (int v = 0; v < 128; ++v)
    for (int u = 0; u < 256; ++u) {
      if (res.mask.at(u, v) == 0.0f) {
        CHECK(res.erp.at(u, v) == 0.0f);  // sentinel outside the frustum
      } else {
        CHECK(res.erp.at(u, v) == doctest::Approx(0.75f).epsilon(1e-6));
      }
    }

  const PerspectiveRaster back = e2p_sample(res.erp, src.cam);
  // interior pixels never touch the mask boundary
  for (int y = 16; y < 48; ++y)
    for (int x = 16; x < 48; ++x)
      CHECK(back.img.at(x, y) == doctest::Approx(0.75f).epsilon(1e-6));
}

TEST_CASE("gradient round trip psnr") {
  const PerspectiveRaster src = smooth_gradient(512, kPi / 2.0);
  const ProjectionResult res = p2e_project(src, {1024, 512});
  const PerspectiveRaster back = e2p_sample(res.erp, src.cam);

  Raster keep(512, 512, 1, RasterKind::Mask);
  for (int y = 8; y < 504; ++y)
    for (int x = 8; x < 504; ++x) keep.at(x, y) = 1.0f;
  CHECK(psnr_inside(src.img, back.img, keep) >= 35.0);
}

TEST_CASE("azimuth shift by whole erp columns rolls the output bit-exactly") {
  const PerspectiveRaster base = smooth_gradient(64, kPi / 2.0);
  const ErpGrid grid{256, 128};
  const ProjectionResult a = p2e_project(base, grid);

  const long k = 37;
  PerspectiveRaster shifted = base;
  shifted.cam.center_azimuth_rad = k * kTwoPi / grid.width_px;
  const ProjectionResult b = p2e_project(shifted, grid);

  for (int v = 0; v < grid.height_px; ++v)
    for (int u = 0; u < grid.width_px; ++u) {
      const int us = static_cast<int>((u + k) % grid.width_px);
      CHECK(b.erp.at(us, v) == a.erp.at(u, v));
      CHECK(b.mask.at(us, v) == a.mask.at(u, v));
    }
}

TEST_CASE("depth projection converts z to radial distance") {
  PerspectiveRaster depth;
  depth.cam = PerspectiveCamera::with_default_yfov(65, 65, kPi / 2.0);
  depth.img = Raster(65, 65, 1, RasterKind::Distance);
  depth.img.data.setConstant(1.0f);

  // corner pixel of a 90deg camera at z = 1: f = 32.5 over 65px, so the
  // corner ray has dx = dy = -1 and |d| = sqrt(3)
  const Eigen::Vector2d f = focal_lengths(depth.cam);
  const double dx = (0 - 32.0) / f.x();
  const double dy = (0 - 32.0) / f.y();
  const double corner = std::sqrt(dx * dx + dy * dy + 1.0);

  const ProjectionResult res = p2e_project_depth(depth, {512, 256});
  REQUIRE(res.mask.data.sum() > 0.0f);
  float seen_max = 0.0f;
  for (int v = 0; v < 256; ++v)
    for (int u = 0; u < 512; ++u)
      if (res.mask.at(u, v) != 0.0f)
        seen_max = std::max(seen_max, res.erp.at(u, v));
  CHECK(seen_max <= static_cast<float>(corner) * (1.0f + 1e-6f));
  CHECK(seen_max >= static_cast<float>(corner) * 0.95f);
}

TEST_CASE("nonpositive depth is rejected up front") {
  PerspectiveRaster depth;
  depth.cam = PerspectiveCamera::with_default_yfov(8, 8, 1.0);
  depth.img = Raster(8, 8, 1, RasterKind::Distance);
  depth.img.data.setConstant(1.0f);
  depth.img.at(3, 3) = 0.0f;
  CHECK_THROWS_AS(p2e_project_depth(depth, {64, 32}), DomainError);
}

TEST_CASE("fronto-parallel plane matches the analytic distance field") {
  // constant z-depth plane: radial distance = z / cos(angle to the axis)
  const int n = 129;
  PerspectiveRaster depth;
  depth.cam = PerspectiveCamera::with_default_yfov(n, n, kPi / 2.0);
  depth.img = Raster(n, n, 1, RasterKind::Distance);
  const double z = 2.5;
  depth.img.data.setConstant(static_cast<float>(z));

  const ErpGrid grid{1024, 512};
  const ProjectionResult res = p2e_project_depth(depth, grid);

  // Depth is nearest-neighbor sampled, so the stored value belongs to the
  // source pixel the ERP ray snaps to. Reproject independently, snap the
  // same way, and evaluate the plane's closed form z / cos(ray angle) there.
  const Eigen::Vector2d f = focal_lengths(depth.cam);
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> du(0, grid.width_px - 1);
  std::uniform_int_distribution<int> dv(0, grid.height_px - 1);
  int checked = 0;
  while (checked < 1000) {
    const int u = du(rng), v = dv(rng);
    if (res.mask.at(u, v) == 0.0f) continue;
    const SphericalAngle ang = erp_pixel_to_angles(u, v, grid);
    const Eigen::Vector3d d = angles_to_direction(ang);
    REQUIRE(d.z() > 0.0);
    const long xn = std::lround(d.x() / d.z() * f.x() + (n - 1) / 2.0);
    const long yn = std::lround(d.y() / d.z() * f.y() + (n - 1) / 2.0);
    const Eigen::Vector3d ray(
        (xn - (n - 1) / 2.0) / f.x(), (yn - (n - 1) / 2.0) / f.y(), 1.0);
    const double cos_axis = 1.0 / ray.norm();
    const double expect = z / cos_axis;
    CHECK(std::abs(res.erp.at(u, v) - expect) / expect < 1e-5);
    ++checked;
  }
}
