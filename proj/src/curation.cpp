// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/curation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "panosphere/io.hpp"

namespace ps {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// triangular-wave reflection of t into [lo, hi]
double reflect_into(double t, double lo, double hi) {
  const double span = hi - lo;
  double s = std::fmod(t - lo, 2.0 * span);
  if (s < 0.0) s += 2.0 * span;
  if (s > span) s = 2.0 * span - s;
  return lo + s;
}

double draw_offset(std::mt19937_64& rng, double range) {
  if (range <= 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-range, range)(rng);
}

std::string substitute(std::string tmpl, const std::string& key,
                       const std::string& value) {
  for (size_t pos = tmpl.find(key); pos != std::string::npos;
       pos = tmpl.find(key, pos + value.size()))
    tmpl.replace(pos, key.size(), value);
  return tmpl;
}

int pool_size(int requested) {
  int n = std::max(1, requested);
  if (const char* env = std::getenv("PANOSPHERE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

struct Job {
  int dataset_index;
  std::string stem;
  std::filesystem::path rgb_path, depth_path;
};

std::optional<CuratedRasters> run_outpaint_command(
    const CurationConfig& cfg, CuratedRasters r, std::uint64_t tag) {
  const auto tmp = std::filesystem::temp_directory_path();
  const std::string id = "panosphere_" + std::to_string(tag);
  const auto in_path = tmp / (id + "_in.psr");
  const auto mask_path = tmp / (id + "_mask.psr");
  const auto out_path = tmp / (id + "_out.psr");
  write_raster(r.rgb, in_path);
  write_raster(r.mask, mask_path);

  std::string cmd = cfg.outpaint_cmd;
  cmd = substitute(cmd, "{in}", in_path.string());
  cmd = substitute(cmd, "{mask}", mask_path.string());
  cmd = substitute(cmd, "{out}", out_path.string());
  const int rc = std::system(cmd.c_str());
  std::optional<CuratedRasters> result;
  if (rc == 0 && std::filesystem::exists(out_path)) {
    try {
      ErpRaster full = read_raster(out_path);
      if (full.width == r.rgb.width && full.height == r.rgb.height &&
          full.channels == r.rgb.channels) {
        // the out-painter must not disturb the observed region
        double mad = 0.0;
        long n = 0;
        for (int v = 0; v < r.rgb.height; ++v)
          for (int u = 0; u < r.rgb.width; ++u)
            if (r.mask.at(u, v) != 0.0f) {
              for (int ch = 0; ch < r.rgb.channels; ++ch)
                mad += std::abs(full.at(u, v, ch) - r.rgb.at(u, v, ch));
              n += r.rgb.channels;
            }
        if (n > 0 && mad / n <= cfg.outpaint_mad_tol) {
          r.rgb = std::move(full);
          r.outpainted = true;
          result = std::move(r);
        }
      }
    } catch (const Error&) {
      // fall through to the failure path
    }
  }
  std::error_code ec;
  std::filesystem::remove(in_path, ec);
  std::filesystem::remove(mask_path, ec);
  std::filesystem::remove(out_path, ec);
  return result;
}

}  // namespace

CurationConfig load_curation_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }

  CurationConfig cfg;
  if (j.contains("grid")) {
    cfg.grid.width_px = j["grid"].value("width", 1024);
    cfg.grid.height_px = j["grid"].value("height", 512);
  }
  cfg.azimuth_offset_range_rad =
      j.value("azimuth_offset_deg", 30.0) * kPi / 180.0;
  cfg.polar_offset_range_rad = j.value("polar_offset_deg", 15.0) * kPi / 180.0;
  cfg.seed = j.value("seed", 0ull);
  cfg.depth_is_distance = j.value("depth_is_distance", false);
  cfg.outpaint_mad_tol = j.value("outpaint_mad_tol", 2.0 / 255.0);
  cfg.out_dir = j.value("out_dir", std::string("curated"));
  cfg.workers = j.value("workers", 1);
  const std::string mode = j.value("outpaint", std::string("none"));
  if (mode == "none")
    cfg.outpaint = OutpaintMode::None;
  else if (mode == "mirror")
    cfg.outpaint = OutpaintMode::Mirror;
  else if (mode == "command")
    cfg.outpaint = OutpaintMode::Command;
  else
    throw ConfigError("unknown outpaint mode: " + mode);
  cfg.outpaint_cmd = j.value("outpaint_cmd", std::string());

  for (const auto& d : j.value("datasets", json::array())) {
    DatasetSpec spec;
    spec.name = d.at("name").get<std::string>();
    spec.root = d.at("root").get<std::string>();
    spec.xfov_rad = d.at("xfov_deg").get<double>() * kPi / 180.0;
    spec.sampling_probability = d.at("sampling_probability").get<double>();
    if (spec.sampling_probability < 0.0)
      throw ConfigError("dataset " + spec.name + ": negative probability");
    cfg.datasets.push_back(std::move(spec));
  }
  return cfg;
}

ErpRaster mirror_fill(const PerspectiveRaster& src, const ErpRaster& partial,
                      const ErpRaster& mask) {
  const PerspectiveCamera& cam = src.cam;
  const Eigen::Vector2d f = focal_lengths(cam);
  const ErpGrid grid = partial.grid();
  ErpRaster out = partial;

  const double phi_lo = -cam.xfov_rad / 2.0, phi_hi = cam.xfov_rad / 2.0;
  const double th_lo = kPi / 2.0 - cam.yfov_rad / 2.0;
  const double th_hi = kPi / 2.0 + cam.yfov_rad / 2.0;

  for (int v = 0; v < grid.height_px; ++v)
    for (int u = 0; u < grid.width_px; ++u) {
      if (mask.at(u, v) != 0.0f) continue;
      const SphericalAngle ang = erp_pixel_to_angles(u, v, grid);
      double phi_rel = ang.azimuth_rad - cam.center_azimuth_rad;
      phi_rel = std::remainder(phi_rel, kTwoPi);
      const double theta_rel = ang.polar_rad - cam.center_polar_rad;

      const double phi_m = reflect_into(phi_rel, phi_lo, phi_hi);
      const double theta_m = reflect_into(theta_rel, th_lo, th_hi);
      const Eigen::Vector3d d = angles_to_direction({phi_m, theta_m});
      const double xs = d.x() / d.z() * f.x() + (cam.width_px - 1) / 2.0;
      const double ys = d.y() / d.z() * f.y() + (cam.height_px - 1) / 2.0;
      for (int c = 0; c < src.img.channels; ++c)
        out.at(u, v, c) = bilinear_sample(src.img, xs, ys, c);
    }
  return out;
}

CuratedRasters curate_one(const PerspectiveRaster& rgb,
                          const PerspectiveRaster& depth,
                          const CurationConfig& cfg, std::mt19937_64& rng) {
  if (rgb.img.width != depth.img.width || rgb.img.height != depth.img.height)
    throw DomainError("curate_one: RGB and depth dims disagree");

  CuratedRasters out;
  out.phi_c = draw_offset(rng, cfg.azimuth_offset_range_rad);
  out.theta_c = draw_offset(rng, cfg.polar_offset_range_rad);

  PerspectiveRaster rgb_c = rgb;
  rgb_c.cam.center_azimuth_rad = out.phi_c;
  rgb_c.cam.center_polar_rad = out.theta_c;
  PerspectiveRaster depth_c = depth;
  depth_c.cam = rgb_c.cam;

  ProjectionResult rgb_proj = p2e_project(rgb_c, cfg.grid);
  ProjectionResult dist_proj =
      p2e_project_depth(depth_c, cfg.grid, cfg.depth_is_distance);
  out.rgb = std::move(rgb_proj.erp);
  out.mask = std::move(rgb_proj.mask);
  out.distance = std::move(dist_proj.erp);

  if (cfg.outpaint == OutpaintMode::Mirror) {
    out.rgb = mirror_fill(rgb_c, out.rgb, out.mask);
    out.outpainted = true;
  } else if (cfg.outpaint == OutpaintMode::Command) {
    if (auto painted = run_outpaint_command(cfg, out, rng())) {
      out = std::move(*painted);
    } else {
      out.outpainted = false;
      out.outpaint_failed = true;
    }
  }
  return out;
}

std::vector<double> normalize_probabilities(
    const std::vector<DatasetSpec>& specs) {
  if (specs.empty()) throw ConfigError("normalize_probabilities: no datasets");
  double total = 0.0;
  for (const auto& s : specs) {
    if (s.sampling_probability < 0.0)
      throw ConfigError("dataset " + s.name + ": negative probability");
    total += s.sampling_probability;
  }
  if (total <= 0.0)
    throw ConfigError("normalize_probabilities: probabilities sum to zero");
  std::vector<double> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(s.sampling_probability / total);
  return out;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write manifest: " + path.string());
  for (const auto& e : entries) {
    json j{{"dataset", e.dataset},
           {"stem", e.stem},
           {"rgb", e.rgb.string()},
           {"distance", e.distance.string()},
           {"mask", e.mask.string()},
           {"meta", e.meta.string()},
           {"weight", e.weight},
           {"epoch_rank", e.epoch_rank},
           {"outpainted", e.outpainted}};
    os << j.dump() << "\n";
  }
}

CurationReport run_curation(const CurationConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("run_curation: no datasets");
  cfg.grid.validate();
  const std::vector<double> probs = normalize_probabilities(cfg.datasets);

  std::filesystem::create_directories(cfg.out_dir);
  CurationReport report;

  // enumerate jobs in a fixed order so per-sample seeds are stable
  std::vector<Job> jobs;
  std::vector<long> dataset_counts(cfg.datasets.size(), 0);
  for (size_t d = 0; d < cfg.datasets.size(); ++d) {
    const auto& spec = cfg.datasets[d];
    if (!std::filesystem::is_directory(spec.root)) {
      report.errors.push_back("dataset " + spec.name + ": missing root " +
                              spec.root.string());
      continue;
    }
    std::vector<std::filesystem::path> depth_files;
    for (const auto& entry : std::filesystem::directory_iterator(spec.root)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 10 && name.ends_with(".depth.psr"))
        depth_files.push_back(entry.path());
    }
    std::sort(depth_files.begin(), depth_files.end());
    for (const auto& depth_path : depth_files) {
      std::string stem = depth_path.filename().string();
      stem.resize(stem.size() - 10);  // strip ".depth.psr"
      std::filesystem::path rgb_path = spec.root / (stem + ".rgb.psr");
      if (!std::filesystem::exists(rgb_path))
        rgb_path = spec.root / (stem + ".png");
      if (!std::filesystem::exists(rgb_path)) {
        report.errors.push_back("dataset " + spec.name + ": no RGB for " + stem);
        continue;
      }
      jobs.push_back({static_cast<int>(d), stem, rgb_path, depth_path});
      ++dataset_counts[d];
    }
    std::filesystem::create_directories(cfg.out_dir / spec.name);
  }

  std::vector<std::optional<ManifestEntry>> results(jobs.size());
  std::vector<std::string> job_errors(jobs.size());

  auto process = [&](size_t idx) {
    const Job& job = jobs[idx];
    const auto& spec = cfg.datasets[job.dataset_index];
    try {
      ErpRaster rgb_img = read_raster(job.rgb_path);
      ErpRaster depth_img = read_raster_as(job.depth_path, RasterKind::Distance);
      PerspectiveRaster rgb{PerspectiveCamera::with_default_yfov(
                                rgb_img.width, rgb_img.height, spec.xfov_rad),
                            std::move(rgb_img)};
      PerspectiveRaster depth{rgb.cam, std::move(depth_img)};

      std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(idx)));
      CuratedRasters curated = curate_one(rgb, depth, cfg, rng);
      if (curated.mask.data.sum() == 0.0f) {
        job_errors[idx] = "sample " + job.stem + ": empty projection, skipped";
        return;
      }

      const auto dir = cfg.out_dir / spec.name;
      ManifestEntry e;
      e.dataset = spec.name;
      e.stem = job.stem;
      e.rgb = dir / (job.stem + ".rgb.psr");
      e.distance = dir / (job.stem + ".dist.psr");
      e.mask = dir / (job.stem + ".mask.psr");
      e.meta = dir / (job.stem + ".meta.json");
      e.outpainted = curated.outpainted;
      write_raster(curated.rgb, e.rgb);
      write_raster(curated.distance, e.distance);
      write_raster(curated.mask, e.mask);

      json meta{{"source", job.rgb_path.string()},
                {"dataset", spec.name},
                {"camera",
                 {{"width", rgb.cam.width_px},
                  {"height", rgb.cam.height_px},
                  {"xfov_rad", rgb.cam.xfov_rad},
                  {"yfov_rad", rgb.cam.yfov_rad}}},
                {"phi_c", curated.phi_c},
                {"theta_c", curated.theta_c},
                {"outpainted", curated.outpainted},
                {"outpaint_failed", curated.outpaint_failed},
                {"dataset_probability", probs[job.dataset_index]}};
      std::ofstream ms(e.meta, std::ios::trunc);
      ms << meta.dump(2) << "\n";
      results[idx] = std::move(e);
    } catch (const Error& err) {
      job_errors[idx] = "sample " + job.stem + ": " + err.what();
    }
  };

  const int n_workers = pool_size(cfg.workers);
  if (n_workers <= 1 || jobs.size() <= 1) {
    for (size_t i = 0; i < jobs.size(); ++i) process(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < jobs.size();
             i = next.fetch_add(1))
          process(i);
      });
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      ManifestEntry e = std::move(*results[i]);
      e.weight = probs[jobs[i].dataset_index] /
                 static_cast<double>(dataset_counts[jobs[i].dataset_index]);
      report.entries.push_back(std::move(e));
    } else if (!job_errors[i].empty()) {
      report.errors.push_back(job_errors[i]);
    }
  }

  // seeded weighted order without replacement (exponential-key sampling)
  std::mt19937_64 order_rng(splitmix64(cfg.seed ^ 0xabcdef1234567890ull));
  std::vector<std::pair<double, size_t>> keys;
  keys.reserve(report.entries.size());
  for (size_t i = 0; i < report.entries.size(); ++i) {
    const double u =
        std::uniform_real_distribution<double>(1e-300, 1.0)(order_rng);
    keys.emplace_back(-std::log(u) / report.entries[i].weight, i);
  }
  std::sort(keys.begin(), keys.end());
  for (long rank = 0; rank < static_cast<long>(keys.size()); ++rank)
    report.entries[keys[rank].second].epoch_rank = rank;

  report.manifest_path = cfg.out_dir / "manifest.jsonl";
  write_manifest(report.manifest_path, report.entries);
  return report;
}

}  // namespace ps
