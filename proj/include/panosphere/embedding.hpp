// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "panosphere/errors.hpp"
#include "panosphere/raster.hpp"

namespace ps {

// Per-patch azimuth/polar angles of an ERP patch grid, evaluated at patch
// centers. phi is monotone in i, theta monotone in j.
struct AngleField {
  int grid_w = 0;  // W'
  int grid_h = 0;  // H'
  Eigen::VectorXd azimuth;  // length W'
  Eigen::VectorXd polar;    // length H'
};

AngleField build_angle_field(int grid_h, int grid_w);

// Fixed sine-cosine embedding of the angle field, one row per grid cell,
// row index j*W' + i, D = 4*D' columns. Entries all lie in [-1, 1] and the
// matrix is fully determined by (H', W', D).
struct SphericalEmbedding {
  int grid_h = 0;
  int grid_w = 0;
  int dim = 0;                  // D
  std::vector<double> coeffs;   // {2^{d_n}}, length D' = D/4
  Eigen::MatrixXd rows;         // (H'*W') x D
};

// Frequency ladder 2^{(n-1) * log2(H') / D'}, n = 1..D'. Strictly increasing,
// first element exactly 1, last strictly below H'.
std::vector<double> coefficient_series(int d_prime, int grid_h);

// One embedding row: [sin(c*phi), cos(c*phi)] over all coefficients, then the
// same for theta (row-major flattening of the 2 x D' x 2 block).
Eigen::VectorXd embed_cell(double phi, double theta,
                           const std::vector<double>& coeffs);

SphericalEmbedding build_sphere_embedding(int grid_h, int grid_w, int dim);

// Embedding matrix packed as a float raster (width = D, height = H'*W').
ErpRaster embedding_to_raster(const SphericalEmbedding& e);

}  // namespace ps
