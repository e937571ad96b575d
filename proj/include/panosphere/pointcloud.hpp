// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "panosphere/raster.hpp"

namespace ps {

struct PointCloud {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  std::optional<Eigen::Matrix<double, Eigen::Dynamic, 3>> colors;   // in [0,1]
  std::optional<Eigen::Matrix<double, Eigen::Dynamic, 3>> normals;  // unit

  long size() const { return points.rows(); }
};

// Lift every stride-th valid ERP pixel to dist * direction. |p| equals the
// source distance up to normalization rounding.
PointCloud distance_to_points(const ErpRaster& dist,
                              const ErpRaster* rgb = nullptr,
                              const ErpRaster* mask = nullptr, int stride = 1);

// Concatenate clouds after applying a per-cloud translation.
PointCloud compose_translated(
    const std::vector<std::pair<PointCloud, Eigen::Vector3d>>& clouds);

// PLY with element vertex N and x y z [red green blue] [nx ny nz]. ASCII by
// default (floats at 9 significant digits); binary_little_endian on request.
void export_ply(const PointCloud& pc, const std::filesystem::path& path,
                bool binary = false);

PointCloud import_ply(const std::filesystem::path& path);

}  // namespace ps
