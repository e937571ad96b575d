// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "panosphere/embedding.hpp"
#include "panosphere/losses.hpp"
#include "panosphere/raster.hpp"

namespace ps {

struct VitConfig {
  int patch = 8;
  int dim = 16;          // D, divisible by 4
  int dim_k = 8;         // attention projection width
  int linear_blocks = 2;
  int cross_blocks = 2;
  std::uint64_t seed = 0;
  LossWeights weights{};
};

struct LinearBlockParams {
  Eigen::MatrixXd w;  // D x D
  Eigen::VectorXd b;  // D
};

struct CrossBlockParams {
  Eigen::MatrixXd wq, wk, wv;  // D x Dk
  Eigen::MatrixXd wo;          // Dk x D
};

struct ToyAttentionParams {
  Eigen::MatrixXd patch_w;  // (P^2 * C) x D
  Eigen::VectorXd patch_b;  // D
  std::vector<LinearBlockParams> linear;
  std::vector<CrossBlockParams> cross;
  Eigen::VectorXd head_w;  // D
  double head_b = 0.0;
};

using ImageD = std::vector<GridD>;  // one H x W plane per channel

ImageD raster_to_image(const ErpRaster& r);

// Flattened P x P x C patches, row index j*W' + i, one row per token.
Eigen::MatrixXd extract_patches(const ImageD& img, int patch);

// extract_patches followed by the affine projection to D dims.
Eigen::MatrixXd patchify(const ImageD& img, int patch,
                         const Eigen::MatrixXd& w, const Eigen::VectorXd& b);

// SoftMax(Z Wq (E Wk)^T / sqrt(Dk)) (E Wv); rows of the attention matrix sum
// to 1, softmax is max-subtracted for stability.
Eigen::MatrixXd sphere_cross_attention(const Eigen::MatrixXd& z,
                                       const Eigen::MatrixXd& e,
                                       const Eigen::MatrixXd& wq,
                                       const Eigen::MatrixXd& wk,
                                       const Eigen::MatrixXd& wv);

// FNV-1a over the raw matrix bytes; used to assert E_sphere stays untouched.
std::uint64_t matrix_checksum(const Eigen::MatrixXd& m);

struct ForwardCache {
  Eigen::MatrixXd tokens;                 // N x (P^2 C)
  std::vector<Eigen::MatrixXd> z;         // activation entering each block
  std::vector<Eigen::MatrixXd> lin_t;     // tanh outputs per linear block
  std::vector<Eigen::MatrixXd> attn_a;    // attention weights per cross block
  std::vector<Eigen::MatrixXd> attn_o;    // attention outputs per cross block
  Eigen::MatrixXd z_final;                // N x D, input to the head
  Eigen::VectorXd head_pre;               // N, pre-softplus
  GridD patch_vals;                       // H' x W'
  GridD pred;                             // H x W
};

struct Gradients {
  ToyAttentionParams p;  // same shapes, gradient values
};

// Patch embed -> k1 tanh-MLP blocks -> k2 cross-attention blocks (queries
// from the image, keys/values from the fixed spherical embedding) -> scalar
// head with softplus -> bilinear upsample to pixel resolution.
class SphereVit {
 public:
  SphereVit(const VitConfig& cfg, int img_h, int img_w, int channels);

  const VitConfig& config() const { return cfg_; }
  const SphericalEmbedding& embedding() const { return emb_; }
  ToyAttentionParams& params() { return p_; }
  const ToyAttentionParams& params() const { return p_; }
  int grid_h() const { return grid_h_; }
  int grid_w() const { return grid_w_; }

  GridD forward(const ImageD& img, ForwardCache* cache = nullptr) const;
  ErpRaster forward(const ErpRaster& img) const;

  // dL/dparams given dL/dprediction, reusing the cached forward pass.
  Gradients backward(const ForwardCache& cache, const GridD& dpred) const;

  void apply_sgd(const Gradients& g, double lr);

 private:
  VitConfig cfg_;
  int img_h_, img_w_, channels_, grid_h_, grid_w_;
  SphericalEmbedding emb_;
  ToyAttentionParams p_;
};

struct GradCheckEntry {
  std::string group;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool pass = false;
  double eps = 0.0;
  double tol = 0.0;
};

// Central finite differences of the full training loss against the analytic
// gradients, per parameter group.
GradCheckReport gradient_check(const VitConfig& cfg, int img_h, int img_w,
                               int channels, double eps = 1e-3,
                               double tol = 1e-3);

struct TrainResult {
  std::vector<double> losses;  // total loss per step, losses[0] = initial
};

TrainResult train_sgd(SphereVit& model, const ImageD& img, const GridD& gt,
                      const GridD& valid, int steps, double lr);

}  // namespace ps
