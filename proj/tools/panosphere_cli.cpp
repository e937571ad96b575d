// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
//
// panosphere: perspective <-> panorama projection, curation, toy SphereViT
// forward/gradcheck, depth metrics, and point-cloud reconstruction.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "panosphere/curation.hpp"
#include "panosphere/embedding.hpp"
#include "panosphere/io.hpp"
#include "panosphere/metrics.hpp"
#include "panosphere/pointcloud.hpp"
#include "panosphere/projection.hpp"
#include "panosphere/sphere_vit.hpp"

namespace {

using nlohmann::json;

constexpr double kDegToRad = ps::kPi / 180.0;

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::map<std::string, std::string> kv;
  if (path.empty()) return kv;
  std::ifstream is(path);
  if (!is) throw ps::Error("cannot open config: " + path);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

ps::VitConfig vit_config_from_file(const std::string& path,
                                   std::uint64_t seed) {
  const auto kv = read_kv_config(path);
  ps::VitConfig cfg;
  cfg.seed = seed;
  auto get_int = [&](const char* key, int fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stoi(it->second);
  };
  auto get_double = [&](const char* key, double fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  cfg.patch = get_int("patch", cfg.patch);
  cfg.dim = get_int("dim", cfg.dim);
  cfg.dim_k = get_int("dim_k", cfg.dim / 2);
  cfg.linear_blocks = get_int("linear_blocks", cfg.linear_blocks);
  cfg.cross_blocks = get_int("cross_blocks", cfg.cross_blocks);
  cfg.weights.lambda_dis = get_double("lambda_dis", cfg.weights.lambda_dis);
  cfg.weights.lambda_nor = get_double("lambda_nor", cfg.weights.lambda_nor);
  return cfg;
}

ps::PerspectiveCamera camera_from_flags(int w, int h, double xfov_deg,
                                        double yfov_deg, double phi_deg,
                                        double theta_deg) {
  ps::PerspectiveCamera cam =
      yfov_deg > 0.0
          ? ps::PerspectiveCamera{w, h, xfov_deg * kDegToRad,
                                  yfov_deg * kDegToRad, phi_deg * kDegToRad,
                                  theta_deg * kDegToRad}
          : ps::PerspectiveCamera::with_default_yfov(
                w, h, xfov_deg * kDegToRad, phi_deg * kDegToRad,
                theta_deg * kDegToRad);
  cam.validate();
  return cam;
}

int cmd_project(const std::string& mode, const std::string& input,
                const std::string& out, const std::string& mask_out,
                int erp_w, int erp_h, int persp_w, int persp_h,
                double xfov_deg, double yfov_deg, double phi_deg,
                double theta_deg, bool depth, bool depth_is_distance) {
  if (mode == "p2e") {
    ps::Raster img = ps::read_raster(input);
    ps::PerspectiveCamera cam = camera_from_flags(
        img.width, img.height, xfov_deg, yfov_deg, phi_deg, theta_deg);
    ps::PerspectiveRaster src{cam, std::move(img)};
    const ps::ErpGrid grid{erp_w, erp_h};
    ps::ProjectionResult res =
        depth ? ps::p2e_project_depth(src, grid, depth_is_distance)
              : ps::p2e_project(src, grid);
    if (res.mask.data.sum() == 0.0f)
      std::cerr << "warning: frustum covers zero ERP pixels\n";
    ps::write_raster(res.erp, out);
    if (!mask_out.empty()) ps::write_raster(res.mask, mask_out);
    return 0;
  }
  if (mode == "e2p") {
    const ps::ErpRaster src = ps::read_raster(input);
    ps::PerspectiveCamera cam = camera_from_flags(
        persp_w, persp_h, xfov_deg, yfov_deg, phi_deg, theta_deg);
    const ps::PerspectiveRaster res = ps::e2p_sample(src, cam);
    ps::write_raster(res.img, out);
    return 0;
  }
  throw ps::ConfigError("project: mode must be p2e or e2p");
}

int cmd_eval(const std::string& manifest, const std::string& align,
             bool rmse_literal, bool pool_pixels, const std::string& out) {
  std::ifstream is(manifest);
  if (!is) throw ps::Error("cannot open manifest: " + manifest);

  std::vector<ps::EvalPair> pairs;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    ps::EvalPair p;
    p.pred = ps::read_raster_as(j.at("pred_path").get<std::string>(),
                                ps::RasterKind::Distance);
    p.gt = ps::read_raster_as(j.at("gt_path").get<std::string>(),
                              ps::RasterKind::Distance);
    if (j.contains("mask_path"))
      p.mask = ps::read_raster_as(j.at("mask_path").get<std::string>(),
                                  ps::RasterKind::Mask);
    pairs.push_back(std::move(p));
  }

  ps::DatasetOptions opt;
  opt.alignment = ps::alignment_from_string(align);
  opt.rmse_mean_outside_root = rmse_literal;
  opt.pool_pixels = pool_pixels;
  const ps::DatasetReport report = ps::eval_dataset(pairs, opt);

  json j{{"alignment", ps::to_string(opt.alignment)},
         {"n_pairs", report.n_pairs},
         {"n_valid", report.mean.n_valid},
         {"absrel", report.mean.absrel},
         {"rmse", report.mean.rmse},
         {"delta1", report.mean.delta1},
         {"delta2", report.mean.delta2},
         {"errors", report.errors}};
  if (!out.empty()) {
    std::ofstream os(out, std::ios::trunc);
    os << j.dump(2) << "\n";
  }
  std::printf("%10s %10s %10s %10s\n", "AbsRel v", "RMSE v", "d1 ^", "d2 ^");
  std::printf("%10.2f %10.2f %10.2f %10.2f\n", report.mean.absrel,
              report.mean.rmse, report.mean.delta1, report.mean.delta2);
  for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
  return 0;
}

int cmd_compose(const std::string& scene, const std::string& out, bool binary) {
  std::ifstream is(scene);
  if (!is) throw ps::Error("cannot open scene: " + scene);
  json j;
  is >> j;
  std::vector<std::pair<ps::PointCloud, Eigen::Vector3d>> clouds;
  for (const auto& entry : j.at("clouds")) {
    const auto t = entry.value("translation", std::vector<double>{0, 0, 0});
    if (t.size() != 3)
      throw ps::ConfigError("compose: translation must have 3 components");
    clouds.emplace_back(
        ps::import_ply(entry.at("cloud_path").get<std::string>()),
        Eigen::Vector3d(t[0], t[1], t[2]));
  }
  ps::export_ply(ps::compose_translated(clouds), out, binary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoramic geometry and depth toolkit"};
  app.require_subcommand(1);

  // project
  auto* project = app.add_subcommand("project", "P2E / E2P projection");
  std::string pr_mode, pr_input, pr_out, pr_mask_out;
  int pr_erp_w = 1024, pr_erp_h = 512, pr_persp_w = 512, pr_persp_h = 512;
  double pr_xfov = 90.0, pr_yfov = 0.0, pr_phi = 0.0, pr_theta = 0.0;
  bool pr_depth = false, pr_depth_is_distance = false;
  project->add_option("--mode", pr_mode, "p2e or e2p")->required();
  project->add_option("--input", pr_input)->required();
  project->add_option("--out", pr_out)->required();
  project->add_option("--mask-out", pr_mask_out, "coverage mask (p2e only)");
  project->add_option("--erp-width", pr_erp_w);
  project->add_option("--erp-height", pr_erp_h);
  project->add_option("--persp-width", pr_persp_w, "output width (e2p)");
  project->add_option("--persp-height", pr_persp_h, "output height (e2p)");
  project->add_option("--xfov-deg", pr_xfov);
  project->add_option("--yfov-deg", pr_yfov, "defaults to xfov * H / W");
  project->add_option("--phi-deg", pr_phi, "optical center azimuth");
  project->add_option("--theta-deg", pr_theta, "optical center polar offset");
  project->add_flag("--depth", pr_depth, "treat input as z-depth (p2e)");
  project->add_flag("--depth-is-distance", pr_depth_is_distance,
                    "input already stores radial distance");

  // curate
  auto* curate = app.add_subcommand("curate", "run the data curation engine");
  std::string cu_config, cu_outpaint_cmd;
  std::uint64_t cu_seed = 0;
  int cu_workers = 0;
  bool cu_seed_set = false, cu_workers_set = false;
  curate->add_option("--config", cu_config)->required();
  curate->add_option("--seed", cu_seed)->each([&](const std::string&) {
    cu_seed_set = true;
  });
  curate->add_option("--workers", cu_workers)->each([&](const std::string&) {
    cu_workers_set = true;
  });
  curate->add_option("--outpaint-cmd", cu_outpaint_cmd,
                     "external command template with {in} {mask} {out}");

  // embed
  auto* embed = app.add_subcommand("embed", "dump the spherical embedding");
  int em_gh = 32, em_gw = 64, em_dim = 64;
  std::string em_out;
  embed->add_option("--grid-h", em_gh, "patch rows H'");
  embed->add_option("--grid-w", em_gw, "patch cols W'");
  embed->add_option("--dim", em_dim, "embedding dim D (divisible by 4)");
  embed->add_option("--out", em_out)->required();

  // forward
  auto* forward = app.add_subcommand("forward", "toy SphereViT inference");
  std::string fw_input, fw_config, fw_out;
  std::uint64_t fw_seed = 0;
  forward->add_option("--input", fw_input)->required();
  forward->add_option("--config", fw_config, "key=value model config");
  forward->add_option("--seed", fw_seed);
  forward->add_option("--out", fw_out)->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck",
                                       "finite-difference gradient check");
  std::string gc_config, gc_out;
  std::uint64_t gc_seed = 0;
  int gc_w = 32, gc_h = 16, gc_channels = 1;
  double gc_eps = 1e-3, gc_tol = 1e-3;
  gradcheck->add_option("--config", gc_config);
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--width", gc_w);
  gradcheck->add_option("--height", gc_h);
  gradcheck->add_option("--channels", gc_channels);
  gradcheck->add_option("--eps", gc_eps);
  gradcheck->add_option("--tol", gc_tol);
  gradcheck->add_option("--out", gc_out, "JSON report path");

  // eval
  auto* eval = app.add_subcommand("eval", "depth metrics over a manifest");
  std::string ev_manifest, ev_align = "median", ev_out;
  bool ev_rmse_literal = false, ev_pool = false;
  eval->add_option("--manifest", ev_manifest, "JSON lines of {pred_path, gt_path, mask_path?}")
      ->required();
  eval->add_option("--align", ev_align, "none | median | affine");
  eval->add_flag("--rmse-literal", ev_rmse_literal,
                 "report (1/N)*sqrt(sum err^2) instead of sqrt(mean err^2)");
  eval->add_flag("--pool-pixels", ev_pool, "pool pixels instead of per-image mean");
  eval->add_option("--out", ev_out, "JSON report path");

  // reconstruct
  auto* reconstruct = app.add_subcommand("reconstruct",
                                         "panoramic distance -> point cloud");
  std::string rc_distance, rc_rgb, rc_mask, rc_out;
  int rc_stride = 1;
  bool rc_binary = false;
  reconstruct->add_option("--distance", rc_distance)->required();
  reconstruct->add_option("--rgb", rc_rgb);
  reconstruct->add_option("--mask", rc_mask);
  reconstruct->add_option("--stride", rc_stride);
  reconstruct->add_option("--out", rc_out)->required();
  reconstruct->add_flag("--binary", rc_binary, "binary PLY");

  // compose
  auto* compose = app.add_subcommand("compose",
                                     "translate and merge point clouds");
  std::string cp_scene, cp_out;
  bool cp_binary = false;
  compose->add_option("--scene", cp_scene, "JSON {clouds: [{cloud_path, translation}]}")
      ->required();
  compose->add_option("--out", cp_out)->required();
  compose->add_flag("--binary", cp_binary, "binary PLY");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (project->parsed())
      return cmd_project(pr_mode, pr_input, pr_out, pr_mask_out, pr_erp_w,
                         pr_erp_h, pr_persp_w, pr_persp_h, pr_xfov, pr_yfov,
                         pr_phi, pr_theta, pr_depth, pr_depth_is_distance);
    if (curate->parsed()) {
      ps::CurationConfig cfg = ps::load_curation_config(cu_config);
      if (cu_seed_set) cfg.seed = cu_seed;
      if (cu_workers_set) cfg.workers = cu_workers;
      if (!cu_outpaint_cmd.empty()) {
        cfg.outpaint = ps::OutpaintMode::Command;
        cfg.outpaint_cmd = cu_outpaint_cmd;
      }
      const ps::CurationReport report = ps::run_curation(cfg);
      for (const auto& e : report.entries)
        std::cout << "curated " << e.dataset << "/" << e.stem
                  << (e.outpainted ? " (outpainted)" : "") << "\n";
      for (const auto& err : report.errors) std::cerr << "error: " << err << "\n";
      std::cout << "manifest: " << report.manifest_path.string() << "\n";
      return 0;
    }
    if (embed->parsed()) {
      const ps::SphericalEmbedding e =
          ps::build_sphere_embedding(em_gh, em_gw, em_dim);
      ps::write_raster(ps::embedding_to_raster(e), em_out);
      return 0;
    }
    if (forward->parsed()) {
      const ps::ErpRaster img = ps::read_raster(fw_input);
      const ps::VitConfig cfg = vit_config_from_file(fw_config, fw_seed);
      const ps::SphereVit model(cfg, img.height, img.width, img.channels);
      ps::write_raster(model.forward(img), fw_out);
      return 0;
    }
    if (gradcheck->parsed()) {
      ps::VitConfig cfg = vit_config_from_file(gc_config, gc_seed);
      const ps::GradCheckReport report =
          ps::gradient_check(cfg, gc_h, gc_w, gc_channels, gc_eps, gc_tol);
      json groups = json::array();
      for (const auto& e : report.entries)
        groups.push_back({{"param_group", e.group},
                          {"max_rel_err", e.max_rel_err},
                          {"pass", e.pass}});
      const json j{{"eps", report.eps},
                   {"tol", report.tol},
                   {"max_rel_err", report.max_rel_err},
                   {"pass", report.pass},
                   {"groups", groups}};
      if (!gc_out.empty()) {
        std::ofstream os(gc_out, std::ios::trunc);
        os << j.dump(2) << "\n";
      }
      std::cout << j.dump(2) << "\n";
      return report.pass ? 0 : 1;
    }
    if (eval->parsed())
      return cmd_eval(ev_manifest, ev_align, ev_rmse_literal, ev_pool, ev_out);
    if (reconstruct->parsed()) {
      const ps::ErpRaster dist =
          ps::read_raster_as(rc_distance, ps::RasterKind::Distance);
      std::optional<ps::ErpRaster> rgb, mask;
      if (!rc_rgb.empty()) rgb = ps::read_raster_as(rc_rgb, ps::RasterKind::Rgb);
      if (!rc_mask.empty())
        mask = ps::read_raster_as(rc_mask, ps::RasterKind::Mask);
      const ps::PointCloud pc = ps::distance_to_points(
          dist, rgb ? &*rgb : nullptr, mask ? &*mask : nullptr, rc_stride);
      ps::export_ply(pc, rc_out, rc_binary);
      std::cout << "wrote " << pc.size() << " points\n";
      return 0;
    }
    if (compose->parsed()) return cmd_compose(cp_scene, cp_out, cp_binary);
  } catch (const ps::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
