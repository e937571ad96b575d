// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>

#include "panosphere/raster.hpp"

namespace ps {

enum class AlignmentMode { None, Median, Affine };

struct LossWeights {
  double lambda_dis = 1.0;
  double lambda_nor = 2.0;
};

// Dense double-precision grid, indexed (row = v, col = u).
using GridD = Eigen::ArrayXXd;

// Deterministic pairwise summation (fixed fan-in tree).
double pairwise_sum(const Eigen::VectorXd& values);

GridD raster_to_grid(const ErpRaster& r, int channel = 0);
ErpRaster grid_to_raster(const GridD& g, RasterKind kind);

// Unit ray direction of every ERP pixel (x/y/z planes).
struct DirectionGrid {
  GridD x, y, z;
};
DirectionGrid build_direction_grid(const ErpGrid& g);

// --- alignment -------------------------------------------------------------

double masked_median(const GridD& values, const GridD& valid);

// Subgradient weights of the masked median: nonzero exactly on the middle
// element(s), summing to 1.
GridD masked_median_weights(const GridD& values, const GridD& valid);

// pred * median(gt | mask) / median(pred | mask)
GridD median_align(const GridD& pred, const GridD& gt, const GridD& valid);

struct AffineFit {
  double scale = 1.0;
  double shift = 0.0;  // aligned = scale * (pred + shift)
};
AffineFit affine_fit(const GridD& pred, const GridD& gt, const GridD& valid);
GridD affine_align(const GridD& pred, const GridD& gt, const GridD& valid);

// --- distance-to-normal ----------------------------------------------------

// Normals from central differences of the lifted points dist * direction,
// wrapping u across the seam, clamping v at the poles. Normals face the
// origin (n . p <= 0). valid = 1 where the full stencil is valid and the
// cross product is nondegenerate.
struct NormalGrid {
  GridD nx, ny, nz;
  GridD valid;
};
NormalGrid distance_to_normal(const GridD& dist, const GridD& valid_in,
                              const DirectionGrid& dirs);

// Chain rule through distance_to_normal: given dL/dn, accumulate dL/ddist.
// The orientation flip and the valid set are treated as locally constant.
GridD distance_to_normal_backward(const GridD& dist, const NormalGrid& fwd,
                                  const DirectionGrid& dirs, const GridD& gnx,
                                  const GridD& gny, const GridD& gnz);

// --- losses ----------------------------------------------------------------

// Mean L1 distance residual over the valid set. With latitude_weighted the
// mean is sin(theta)-weighted instead of uniform (off by default).
double loss_dis(const GridD& pred_aligned, const GridD& gt, const GridD& valid,
                bool latitude_weighted = false);

// Mean per-pixel L1 norm of the 3-vector normal difference.
double loss_nor(const NormalGrid& pred_n, const NormalGrid& gt_n,
                bool latitude_weighted = false);

struct TotalLoss {
  double total = 0.0;
  double dis = 0.0;
  double nor = 0.0;
};

// Median-aligns pred, then lambda_dis * L_dis + lambda_nor * L_nor with
// normals from D2N of both rasters (or the provided GT normals).
TotalLoss total_loss(const GridD& pred, const GridD& gt, const GridD& valid,
                     const LossWeights& w, const DirectionGrid& dirs,
                     const NormalGrid* gt_normals = nullptr);

// total_loss plus its exact subgradient w.r.t. the raw (unaligned) pred.
struct TotalLossGrad {
  TotalLoss loss;
  GridD grad;
};
TotalLossGrad total_loss_grad(const GridD& pred, const GridD& gt,
                              const GridD& valid, const LossWeights& w,
                              const DirectionGrid& dirs,
                              const NormalGrid* gt_normals = nullptr);

// --- raster-level wrappers ---------------------------------------------------

ErpRaster median_align(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask = nullptr);
ErpRaster affine_align(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask = nullptr);

// 3-channel Normal raster; invalid pixels carry the 0 sentinel.
struct NormalRaster {
  ErpRaster normals;
  ErpRaster valid;
};
NormalRaster distance_to_normal(const ErpRaster& dist,
                                const ErpRaster* mask = nullptr);

double loss_dis(const ErpRaster& pred_aligned, const ErpRaster& gt,
                const ErpRaster* mask = nullptr, bool latitude_weighted = false);
double loss_nor(const ErpRaster& pred_normals, const ErpRaster& gt_normals,
                const ErpRaster* mask = nullptr, bool latitude_weighted = false);
TotalLoss total_loss(const ErpRaster& pred, const ErpRaster& gt,
                     const ErpRaster* mask = nullptr,
                     const LossWeights& w = {},
                     const ErpRaster* gt_normals = nullptr);

}  // namespace ps
