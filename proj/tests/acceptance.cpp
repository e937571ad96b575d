// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
//
// Property-based acceptance suite. Prints one pass/fail line per criterion
// and exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "panosphere/curation.hpp"
#include "panosphere/io.hpp"
#include "panosphere/metrics.hpp"
#include "panosphere/pointcloud.hpp"
#include "panosphere/projection.hpp"
#include "panosphere/sphere_vit.hpp"

using namespace ps;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s (%s)\n", pass ? "PASS" : "FAIL", idx, name,
              detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

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

// --- 1 ----------------------------------------------------------------

void criterion_geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uphi(0.0, kTwoPi);
  std::uniform_real_distribution<double> utheta(0.01, kPi - 0.01);
  const ErpGrid grid{2048, 1024};
  const auto cam = PerspectiveCamera::with_default_yfov(64, 64, 1.0);

  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const SphericalAngle a{uphi(rng), utheta(rng)};
    const SphericalAngle b = ray_to_angles(angles_to_direction(a), cam);
    worst = std::max(worst, std::abs(b.azimuth_rad - a.azimuth_rad));
    worst = std::max(worst, std::abs(b.polar_rad - a.polar_rad));
    const Eigen::Vector2d px = angles_to_erp_pixel(a, grid);
    const SphericalAngle c = erp_pixel_to_angles(px.x(), px.y(), grid);
    worst = std::max(worst, std::abs(c.azimuth_rad - a.azimuth_rad));
    worst = std::max(worst, std::abs(c.polar_rad - a.polar_rad));
  }
  const double secs = seconds_since(t0);
  report(1, "geometry round trips", worst < 1e-9 && secs < 1.0,
         "max err " + std::to_string(worst) + ", " + std::to_string(secs) +
             " s");
}

// --- 2 ----------------------------------------------------------------

void criterion_projection() {
  const PerspectiveRaster src = smooth_gradient(512, kPi / 2.0);
  const ProjectionResult res = p2e_project(src, {1024, 512});
  const PerspectiveRaster back = e2p_sample(res.erp, src.cam);

  double se = 0.0;
  long n = 0;
  for (int y = 8; y < 504; ++y)
    for (int x = 8; x < 504; ++x) {
      const double d = src.img.at(x, y) - back.img.at(x, y);
      se += d * d;
      ++n;
    }
  const double psnr = -10.0 * std::log10(se / n);

  // solid-angle coverage: sin(theta)-weighted mask fraction vs a direct
  // angular rasterization of the sampled frustum at 4096x2048
  const ErpGrid grid{1024, 512};
  double mask_w = 0.0, total_w = 0.0;
  for (int v = 0; v < grid.height_px; ++v) {
    const double w = std::sin(kPi * (v + 0.5) / grid.height_px);
    for (int u = 0; u < grid.width_px; ++u) {
      total_w += w;
      if (res.mask.at(u, v) != 0.0f) mask_w += w;
    }
  }
  const double mask_frac = mask_w / total_w;

  const Eigen::Vector2d f = focal_lengths(src.cam);
  const double bx = (src.cam.width_px - 1) / (2.0 * f.x());
  const double by = (src.cam.height_px - 1) / (2.0 * f.y());
  const ErpGrid fine{4096, 2048};
  double in_w = 0.0, all_w = 0.0;
  for (int v = 0; v < fine.height_px; ++v) {
    const double theta = kPi * (v + 0.5) / fine.height_px;
    const double w = std::sin(theta);
    for (int u = 0; u < fine.width_px; ++u) {
      all_w += w;
      const double phi = kTwoPi * (u + 0.5) / fine.width_px;
      const Eigen::Vector3d d = angles_to_direction({phi, theta});
      if (d.z() <= 0.0) continue;
      if (std::abs(d.x() / d.z()) <= bx && std::abs(d.y() / d.z()) <= by)
        in_w += w;
    }
  }
  const double oracle = in_w / all_w;
  const double rel = std::abs(mask_frac - oracle) / oracle;

  report(2, "projection consistency",
         psnr >= 35.0 && rel < 0.005,
         "psnr " + std::to_string(psnr) + " dB, coverage " +
             std::to_string(mask_frac) + " vs oracle " +
             std::to_string(oracle) + " (rel " + std::to_string(rel) + ")");
}

// --- 3 ----------------------------------------------------------------

void criterion_depth() {
  const int n = 129;
  PerspectiveRaster depth;
  depth.cam = PerspectiveCamera::with_default_yfov(n, n, kPi / 2.0);
  depth.img = Raster(n, n, 1, RasterKind::Distance);
  const double z = 2.5;
  depth.img.data.setConstant(static_cast<float>(z));

  const ErpGrid grid{1024, 512};
  const ProjectionResult res = p2e_project_depth(depth, grid);
  const Eigen::Vector2d f = focal_lengths(depth.cam);

  std::mt19937 rng(99);
  std::uniform_int_distribution<int> du(0, grid.width_px - 1);
  std::uniform_int_distribution<int> dv(0, grid.height_px - 1);
  int checked = 0;
  double worst = 0.0;
  while (checked < 1000) {
    const int u = du(rng), v = dv(rng);
    if (res.mask.at(u, v) == 0.0f) continue;
    const SphericalAngle ang = erp_pixel_to_angles(u, v, grid);
    const Eigen::Vector3d d = angles_to_direction(ang);
    const long xn = std::lround(d.x() / d.z() * f.x() + (n - 1) / 2.0);
    const long yn = std::lround(d.y() / d.z() * f.y() + (n - 1) / 2.0);
    const Eigen::Vector3d ray((xn - (n - 1) / 2.0) / f.x(),
                              (yn - (n - 1) / 2.0) / f.y(), 1.0);
    const double expect = z * ray.norm();  // z / cos(angle to axis)
    worst = std::max(
        worst, std::abs(res.erp.at(u, v) - expect) / expect);
    ++checked;
  }
  report(3, "depth/distance correctness", worst < 1e-5,
         "max rel err " + std::to_string(worst));
}

// --- 4 ----------------------------------------------------------------

void criterion_embedding() {
  bool ok = true;
  std::string detail;

  const auto series = coefficient_series(4, 16);
  if (!(series.size() == 4 && series[0] == 1.0 && series[1] == 2.0 &&
        series[2] == 4.0 && series[3] == 8.0)) {
    ok = false;
    detail += "series mismatch; ";
  }

  const SphericalEmbedding e = build_sphere_embedding(32, 64, 64);
  if (e.rows.maxCoeff() > 1.0 || e.rows.minCoeff() < -1.0) {
    ok = false;
    detail += "entries out of [-1,1]; ";
  }

  const SphericalEmbedding e2 = build_sphere_embedding(32, 64, 64);
  if (std::memcmp(e.rows.data(), e2.rows.data(),
                  sizeof(double) * e.rows.size()) != 0) {
    ok = false;
    detail += "rebuild differs; ";
  }

  std::set<std::string> rows;
  for (long r = 0; r < e.rows.rows(); ++r) {
    const Eigen::RowVectorXd row = e.rows.row(r);
    rows.emplace(reinterpret_cast<const char*>(row.data()),
                 sizeof(double) * row.size());
  }
  if (rows.size() != static_cast<size_t>(e.rows.rows())) {
    ok = false;
    detail += "duplicate rows; ";
  }

  if (detail.empty()) detail = "series {1,2,4,8}, 2048 distinct rows in range";
  report(4, "embedding invariants", ok, detail);
}

// --- 5 ----------------------------------------------------------------

void criterion_attention() {
  bool ok = true;
  std::string detail;

  double worst_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const int n = 6;
    Eigen::MatrixXd z(n, n), wq(n, 3), wk(n, 3);
    for (long i = 0; i < z.size(); ++i) z.data()[i] = u(rng);
    for (long i = 0; i < wq.size(); ++i) wq.data()[i] = u(rng);
    for (long i = 0; i < wk.size(); ++i) wk.data()[i] = u(rng);
    // E = I and Wv = I expose the attention weights as the output
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a = sphere_cross_attention(z, ident, wq, wk, ident);
    for (long r = 0; r < n; ++r)
      worst_sum = std::max(worst_sum, std::abs(a.row(r).sum() - 1.0));
  }
  if (worst_sum >= 1e-9) {
    ok = false;
    detail += "row sums off by " + std::to_string(worst_sum) + "; ";
  }

  {
    const int n = 4;
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd z(n, n), wk(n, 2);
    for (long i = 0; i < z.size(); ++i) z.data()[i] = u(rng);
    for (long i = 0; i < wk.size(); ++i) wk.data()[i] = u(rng);
    const Eigen::MatrixXd a = sphere_cross_attention(
        z, ident, Eigen::MatrixXd::Zero(n, 2), wk, ident);
    for (long r = 0; r < n && ok; ++r)
      for (long c = 0; c < n; ++c)
        if (a(r, c) != 0.25) {
          ok = false;
          detail += "zero query not exactly uniform; ";
          break;
        }
  }

  {
    VitConfig cfg;
    cfg.patch = 8;
    cfg.dim = 16;
    cfg.dim_k = 8;
    SphereVit model(cfg, 16, 32, 1);
    const std::uint64_t before = matrix_checksum(model.embedding().rows);
    GridD img(16, 32);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 32; ++x)
        img(y, x) = 0.5 + 0.3 * std::sin(0.2 * x + 0.1 * y);
    ForwardCache cache;
    const GridD pred = model.forward({img}, &cache);
    const Gradients g = model.backward(cache, GridD(pred));
    model.apply_sgd(g, 1e-3);
    if (matrix_checksum(model.embedding().rows) != before) {
      ok = false;
      detail += "embedding checksum changed; ";
    }
  }

  if (detail.empty())
    detail = "row sums within " + std::to_string(worst_sum) +
             ", uniform weights exact, checksum stable";
  report(5, "attention contract", ok, detail);
}

// --- 6 ----------------------------------------------------------------

void criterion_gradcheck() {
  const auto t0 = std::chrono::steady_clock::now();
  VitConfig cfg;  // patch 8, D 16, Dk 8, 2 linear + 2 cross blocks
  cfg.seed = 0;
  const GradCheckReport r = gradient_check(cfg, 16, 32, 1, 1e-3, 1e-3);
  const double secs = seconds_since(t0);
  report(6, "gradient check", r.pass && secs < 30.0,
         "max rel err " + std::to_string(r.max_rel_err) + " over " +
             std::to_string(r.entries.size()) + " groups, " +
             std::to_string(secs) + " s");
}

// --- 7 ----------------------------------------------------------------

void criterion_training() {
  VitConfig cfg;
  cfg.seed = 0;
  const int h = 16, w = 32;

  GridD img(h, w), gt(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img(y, x) = 0.5 + 0.4 * std::sin(kTwoPi * x / w) * std::cos(kPi * y / h);
      gt(y, x) = 1.5 + 0.4 * std::sin(kTwoPi * x / w) *
                           std::sin(kPi * (y + 0.5) / h);
    }
  const GridD valid = GridD::Ones(h, w);

  SphereVit model(cfg, h, w, 1);
  const TrainResult a = train_sgd(model, {img}, gt, valid, 200, 1e-2);
  SphereVit rerun(cfg, h, w, 1);
  const TrainResult b = train_sgd(rerun, {img}, gt, valid, 200, 1e-2);

  const double drop = 1.0 - a.losses.back() / a.losses.front();
  const bool deterministic = a.losses == b.losses;
  report(7, "training smoke test", drop >= 0.5 && deterministic,
         "loss " + std::to_string(a.losses.front()) + " -> " +
             std::to_string(a.losses.back()) + " (" +
             std::to_string(100.0 * drop) + "% drop), deterministic " +
             (deterministic ? "yes" : "no"));
}

// --- 8 ----------------------------------------------------------------

void criterion_metrics() {
  bool ok = true;
  std::string detail;

  std::mt19937_64 rng(314);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  double worst = 0.0;
  for (int h = 1; h <= 8; ++h)
    for (int w = 1; w <= 8; ++w) {
      GridD pred(h, w), gt(h, w);
      for (long i = 0; i < pred.size(); ++i) {
        pred.data()[i] = u(rng);
        gt.data()[i] = u(rng);
      }
      const GridD valid = GridD::Ones(h, w);
      MetricOptions opt;
      opt.alignment = AlignmentMode::None;
      const MetricReport r = eval_pair(pred, gt, valid, opt);

      double absrel = 0.0, se = 0.0;
      long d1 = 0, d2 = 0, n = 0;
      for (long i = 0; i < pred.size(); ++i) {
        const double p = pred.data()[i], g = gt.data()[i];
        absrel += std::abs(p - g) / g;
        se += (p - g) * (p - g);
        const double ratio = std::max(p / g, g / p);
        if (ratio < 1.25) ++d1;
        if (ratio < 1.25 * 1.25) ++d2;
        ++n;
      }
      worst = std::max(worst, std::abs(r.absrel - 100.0 * absrel / n));
      worst = std::max(worst, std::abs(r.rmse - 100.0 * std::sqrt(se / n)));
      worst = std::max(worst, std::abs(r.delta1 - 100.0 * d1 / double(n)));
      worst = std::max(worst, std::abs(r.delta2 - 100.0 * d2 / double(n)));
    }
  if (worst >= 1e-12) {
    ok = false;
    detail += "loop oracle off by " + std::to_string(worst) + "; ";
  }

  {
    GridD pred(4, 6), gt(4, 6);
    for (long i = 0; i < pred.size(); ++i) {
      pred.data()[i] = u(rng);
      gt.data()[i] = u(rng);
    }
    const GridD valid = GridD::Ones(4, 6);
    const MetricReport base = eval_pair(pred, gt, valid);
    for (double c : {0.1, 1.0, 10.0}) {
      const MetricReport r = eval_pair(GridD(c * pred), gt, valid);
      if (std::abs(r.absrel - base.absrel) > 1e-12 ||
          std::abs(r.rmse - base.rmse) > 1e-12 || r.delta1 != base.delta1 ||
          r.delta2 != base.delta2) {
        ok = false;
        detail += "median mode not scale invariant at c=" +
                  std::to_string(c) + "; ";
      }
    }
    MetricOptions aff;
    aff.alignment = AlignmentMode::Affine;
    const MetricReport abase = eval_pair(pred, gt, valid, aff);
    for (auto [s, t] : {std::pair{2.0, 3.0}, std::pair{-1.0, 5.0}}) {
      const MetricReport r = eval_pair(GridD(s * pred + t), gt, valid, aff);
      if (std::abs(r.absrel - abase.absrel) > 1e-9 ||
          std::abs(r.rmse - abase.rmse) > 1e-9 ||
          std::abs(r.delta1 - abase.delta1) > 1e-9 ||
          std::abs(r.delta2 - abase.delta2) > 1e-9) {
        ok = false;
        detail += "affine mode not invariant; ";
      }
    }
  }

  {
    GridD pred(1, 3), gt(1, 3);
    pred << 1.0, 2.0, 4.0;
    gt << 1.0, 2.0, 3.0;
    MetricOptions opt;
    opt.alignment = AlignmentMode::None;
    const MetricReport r = eval_pair(pred, gt, GridD::Ones(1, 3), opt);
    if (std::abs(r.absrel - 100.0 / 9.0) > 1e-9 ||
        std::abs(r.delta1 - 200.0 / 3.0) > 1e-9) {
      ok = false;
      detail += "worked example mismatch; ";
    }
  }

  if (detail.empty())
    detail = "loop oracle within " + std::to_string(worst) +
             ", invariances hold, AbsRel 11.11% / d1 66.67%";
  report(8, "alignment/metric oracles", ok, detail);
}

// --- 9 ----------------------------------------------------------------

void criterion_d2n() {
  const ErpGrid grid{512, 256};
  const DirectionGrid dirs = build_direction_grid(grid);
  const GridD dist = GridD::Ones(grid.height_px, grid.width_px);
  const GridD valid = GridD::Ones(grid.height_px, grid.width_px);
  const NormalGrid ng = distance_to_normal(dist, valid, dirs);

  const int skip = grid.height_px / 20;  // top/bottom 5% rows
  double err_sum = 0.0;
  long n = 0;
  for (int v = skip; v < grid.height_px - skip; ++v)
    for (int u = 0; u < grid.width_px; ++u) {
      if (ng.valid(v, u) == 0.0) continue;
      const Eigen::Vector3d nv(ng.nx(v, u), ng.ny(v, u), ng.nz(v, u));
      const Eigen::Vector3d r(dirs.x(v, u), dirs.y(v, u), dirs.z(v, u));
      err_sum += std::acos(std::clamp(-nv.dot(r), -1.0, 1.0));
      ++n;
    }
  const double mean_deg = err_sum / n * 180.0 / kPi;

  // plane z = c: constant normal (0, 0, -1)
  const double c = 2.0;
  GridD pdist = GridD::Ones(grid.height_px, grid.width_px);
  GridD pvalid = GridD::Zero(grid.height_px, grid.width_px);
  for (int v = 0; v < grid.height_px; ++v)
    for (int u = 0; u < grid.width_px; ++u)
      if (dirs.z(v, u) > 0.2) {
        pdist(v, u) = c / dirs.z(v, u);
        pvalid(v, u) = 1.0;
      }
  const NormalGrid pn = distance_to_normal(pdist, pvalid, dirs);
  double plane_worst = 0.0;
  long pm = 0;
  for (int v = 0; v < grid.height_px; ++v)
    for (int u = 0; u < grid.width_px; ++u) {
      if (pn.valid(v, u) == 0.0) continue;
      plane_worst = std::max({plane_worst, std::abs(pn.nx(v, u)),
                              std::abs(pn.ny(v, u)),
                              std::abs(pn.nz(v, u) + 1.0)});
      ++pm;
    }

  report(9, "d2n correctness", mean_deg < 0.5 && plane_worst < 1e-3 && pm > 0,
         "sphere mean err " + std::to_string(mean_deg) + " deg, plane dev " +
             std::to_string(plane_worst));
}

// --- 10 ---------------------------------------------------------------

void criterion_pointcloud() {
  ErpRaster dist(256, 128, 1, RasterKind::Distance);
  for (int v = 0; v < 128; ++v)
    for (int u = 0; u < 256; ++u)
      dist.at(u, v) = static_cast<float>(
          2.0 + 0.5 * std::sin(kTwoPi * u / 256.0) *
                    std::sin(kPi * (v + 0.5) / 128.0));
  const PointCloud pc = distance_to_points(dist);
  const ErpGrid grid = dist.grid();

  std::mt19937_64 rng(55);
  std::uniform_int_distribution<long> pick(0, pc.size() - 1);
  double worst = 0.0;
  int checked = 0;
  while (checked < 1000) {
    const Eigen::Vector3d p = pc.points.row(pick(rng));
    const double r = p.norm();
    const SphericalAngle ang{wrap_azimuth(std::atan2(p.x(), p.z())),
                             std::acos(std::clamp(p.y() / r, -1.0, 1.0))};
    if (ang.polar_rad < 1e-6) continue;  // azimuth undefined at the pole
    ++checked;
    const Eigen::Vector2d uv = angles_to_erp_pixel(ang, grid);
    const int u = static_cast<int>(std::lround(uv.x())) % grid.width_px;
    const int v = std::clamp(static_cast<int>(std::lround(uv.y())), 0,
                             grid.height_px - 1);
    worst = std::max(worst,
                     std::abs(r - dist.at(u, v)) / double(dist.at(u, v)));
  }

  const fs::path dir = fs::temp_directory_path() / "panosphere_acceptance";
  fs::create_directories(dir);
  bool ply_ok = true;
  for (bool binary : {false, true}) {
    const fs::path p = dir / (binary ? "c.bin.ply" : "c.ascii.ply");
    export_ply(pc, p, binary);
    const PointCloud back = import_ply(p);
    if (back.size() != pc.size() ||
        (back.points - pc.points).cwiseAbs().maxCoeff() >=
            1e-6 * pc.points.cwiseAbs().maxCoeff())
      ply_ok = false;
  }

  report(10, "point-cloud consistency", worst < 1e-6 && ply_ok,
         "reproject rel err " + std::to_string(worst) + ", ply round trip " +
             (ply_ok ? "exact" : "lossy"));
}

// --- 11 ---------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void criterion_curation() {
  const fs::path base =
      fs::temp_directory_path() / "panosphere_acceptance" / "curation";
  fs::remove_all(base);
  fs::create_directories(base);

  // dataset sampling probabilities mirroring the training mixture
  const std::vector<std::pair<std::string, double>> mixture = {
      {"hps", 16.59}, {"vk", 14.05}, {"mvs", 5.02},  {"us4k", 6.86},
      {"dkb", 15.91}, {"dr", 15.16}, {"s3d", 26.41}};

  CurationConfig cfg;
  cfg.grid = {128, 64};
  cfg.seed = 11;
  cfg.out_dir = base / "out";
  std::mt19937 rng(8);
  std::uniform_real_distribution<float> uf(0.1f, 1.0f);
  for (const auto& [name, prob] : mixture) {
    DatasetSpec spec;
    spec.name = name;
    spec.root = base / name;
    spec.xfov_rad = kPi / 2.0;
    spec.sampling_probability = prob;
    fs::create_directories(spec.root);
    Raster rgb(16, 16, 3, RasterKind::Rgb);
    Raster depth(16, 16, 1, RasterKind::Distance);
    for (long i = 0; i < rgb.size(); ++i) rgb.data[i] = uf(rng);
    for (long i = 0; i < depth.size(); ++i) depth.data[i] = 1.0f + uf(rng);
    write_raster(rgb, spec.root / "a.rgb.psr");
    write_raster(depth, spec.root / "a.depth.psr");
    cfg.datasets.push_back(std::move(spec));
  }

  const CurationReport a = run_curation(cfg);
  std::vector<std::string> snap;
  snap.push_back(slurp(a.manifest_path));
  for (const auto& e : a.entries) {
    snap.push_back(slurp(e.rgb));
    snap.push_back(slurp(e.distance));
    snap.push_back(slurp(e.mask));
  }
  const CurationReport b = run_curation(cfg);
  bool identical = a.entries.size() == b.entries.size() &&
                   slurp(b.manifest_path) == snap[0];
  size_t si = 1;
  for (const auto& e : b.entries) {
    identical = identical && slurp(e.rgb) == snap[si] &&
                slurp(e.distance) == snap[si + 1] &&
                slurp(e.mask) == snap[si + 2];
    si += 3;
  }

  // mixture probabilities already sum to 100: normalization must return
  // them unchanged (S3D 26.41% -> 0.2641)
  const std::vector<double> probs = normalize_probabilities(cfg.datasets);
  double prob_err = 0.0;
  for (size_t i = 0; i < probs.size(); ++i)
    prob_err = std::max(prob_err,
                        std::abs(probs[i] - mixture[i].second / 100.0));
  // and the manifest carries weight = prob / dataset size (1 sample each)
  double weight_err = 1.0;
  for (const auto& e : a.entries)
    if (e.dataset == "s3d") weight_err = std::abs(e.weight - 0.2641);

  report(11, "curation determinism",
         identical && a.errors.empty() && prob_err < 1e-4 &&
             weight_err < 1e-4,
         std::string("two runs ") +
             (identical ? "byte-identical" : "DIFFER") + ", s3d prob err " +
             std::to_string(prob_err) + ", weight err " +
             std::to_string(weight_err));
}

}  // namespace

int main() {
  criterion_geometry();
  criterion_projection();
  criterion_depth();
  criterion_embedding();
  criterion_attention();
  criterion_gradcheck();
  criterion_training();
  criterion_metrics();
  criterion_d2n();
  criterion_pointcloud();
  criterion_curation();
  if (failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failed\n", failures);
  return 1;
}
