// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "panosphere/raster.hpp"

namespace ps {

enum class SampleMode { Bilinear, Nearest };

struct ProjectionResult {
  ErpRaster erp;
  ErpRaster mask;  // 1-channel, 1 = covered by the camera frustum
};

// Inverse-warp a perspective raster onto the ERP grid. Every ERP pixel is
// mapped through angle -> direction -> frustum test -> source sample; pixels
// outside the frustum carry the sentinel 0 and mask 0.
ProjectionResult p2e_project(const PerspectiveRaster& src, const ErpGrid& grid,
                             SampleMode mode = SampleMode::Bilinear);

// Same warp for z-depth, nearest-neighbor sampled, with each sampled value
// converted to radial distance: dist = z * |(dx, dy, 1)| at the source pixel.
// Set src_is_distance when the dataset already stores radial distance.
ProjectionResult p2e_project_depth(const PerspectiveRaster& src_depth,
                                   const ErpGrid& grid,
                                   bool src_is_distance = false);

// Sample an ERP raster into a perspective frame (bilinear for Rgb, nearest
// for Distance/Mask), wrapping azimuthally across the u = 0 seam.
PerspectiveRaster e2p_sample(const ErpRaster& src, const PerspectiveCamera& cam);

// Bilinear lookup with clamped edges; exact on images affine in (x, y).
float bilinear_sample(const Raster& r, double x, double y, int c);

// Bilinear lookup on an ERP raster: u wraps modulo width, v clamps.
float erp_bilinear_sample(const ErpRaster& r, double u, double v, int c);

}  // namespace ps
