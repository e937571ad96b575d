// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "panosphere/projection.hpp"
#include "panosphere/raster.hpp"

namespace ps {

struct DatasetSpec {
  std::string name;
  std::filesystem::path root;
  double xfov_rad = 0.0;
  double sampling_probability = 0.0;  // raw; normalized at manifest time
};

enum class OutpaintMode { None, Mirror, Command };

struct CurationConfig {
  ErpGrid grid{1024, 512};
  double azimuth_offset_range_rad = 30.0 * kPi / 180.0;  // +/- range
  double polar_offset_range_rad = 15.0 * kPi / 180.0;
  std::uint64_t seed = 0;
  OutpaintMode outpaint = OutpaintMode::None;
  std::string outpaint_cmd;  // template with {in} {mask} {out} placeholders
  double outpaint_mad_tol = 2.0 / 255.0;
  bool depth_is_distance = false;
  std::filesystem::path out_dir;
  int workers = 1;
  std::vector<DatasetSpec> datasets;
};

CurationConfig load_curation_config(const std::filesystem::path& path);

// Deterministic on-sphere fill of the uncovered region: angles are
// mirror-tiled back into the camera's angular footprint and resampled from
// the source frame. Stands in for a generative out-painter when running
// offline.
ErpRaster mirror_fill(const PerspectiveRaster& src, const ErpRaster& partial,
                      const ErpRaster& mask);

struct CuratedRasters {
  ErpRaster rgb;
  ErpRaster distance;
  ErpRaster mask;
  double phi_c = 0.0;
  double theta_c = 0.0;
  bool outpainted = false;
  bool outpaint_failed = false;
};

// Draws (phi_c, theta_c) uniformly from the configured ranges, projects RGB
// (bilinear) and depth (nearest, converted to radial distance), and fills the
// RGB panorama per the out-paint mode. Distance is never out-painted.
CuratedRasters curate_one(const PerspectiveRaster& rgb,
                          const PerspectiveRaster& depth,
                          const CurationConfig& cfg, std::mt19937_64& rng);

struct ManifestEntry {
  std::string dataset;
  std::string stem;
  std::filesystem::path rgb, distance, mask, meta;
  double weight = 0.0;  // normalized dataset probability / dataset size
  long epoch_rank = 0;  // seeded weighted order without replacement
  bool outpainted = false;
};

struct CurationReport {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> errors;   // per-dataset / per-sample failures
  std::filesystem::path manifest_path;
};

// Normalized per-dataset probabilities, in dataset order. Errors when the
// raw probabilities are all zero or negative.
std::vector<double> normalize_probabilities(const std::vector<DatasetSpec>& specs);

// Curates every sample of every resolvable dataset and writes the JSON-lines
// manifest. Samples are independent work items processed by a bounded pool
// (capped by PANOSPHERE_THREADS); outputs are byte-identical for a fixed
// (config, seed) regardless of worker count.
CurationReport run_curation(const CurationConfig& cfg);

// Manifest writer, exposed separately for tests.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

}  // namespace ps
