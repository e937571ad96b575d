// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/embedding.hpp"

#include <cmath>

#include "panosphere/geometry.hpp"

namespace ps {

AngleField build_angle_field(int grid_h, int grid_w) {
  if (grid_h < 2 || grid_w < 2)
    throw ConfigError("AngleField: patch grid must be at least 2x2");
  AngleField f;
  f.grid_h = grid_h;
  f.grid_w = grid_w;
  f.azimuth.resize(grid_w);
  f.polar.resize(grid_h);
  // patch centers under the linear ERP pixel->angle map
  for (int i = 0; i < grid_w; ++i) f.azimuth[i] = kTwoPi * (i + 0.5) / grid_w;
  for (int j = 0; j < grid_h; ++j) f.polar[j] = kPi * (j + 0.5) / grid_h;
  return f;
}

std::vector<double> coefficient_series(int d_prime, int grid_h) {
  if (d_prime < 1) throw ConfigError("coefficient_series: D' must be >= 1");
  if (grid_h < 2)
    throw ConfigError("coefficient_series: H' must be >= 2, got " +
                      std::to_string(grid_h));
  const double base = std::log2(static_cast<double>(grid_h));
  std::vector<double> coeffs(d_prime);
  for (int n = 1; n <= d_prime; ++n)
    coeffs[n - 1] = std::exp2((n - 1) * base / d_prime);
  return coeffs;
}

Eigen::VectorXd embed_cell(double phi, double theta,
                           const std::vector<double>& coeffs) {
  const int d_prime = static_cast<int>(coeffs.size());
  Eigen::VectorXd out(4 * d_prime);
  for (int n = 0; n < d_prime; ++n) {
    out[2 * n] = std::sin(coeffs[n] * phi);
    out[2 * n + 1] = std::cos(coeffs[n] * phi);
    out[2 * d_prime + 2 * n] = std::sin(coeffs[n] * theta);
    out[2 * d_prime + 2 * n + 1] = std::cos(coeffs[n] * theta);
  }
  return out;
}

SphericalEmbedding build_sphere_embedding(int grid_h, int grid_w, int dim) {
  if (dim % 4 != 0)
    throw ConfigError("build_sphere_embedding: D must be divisible by 4");
  const AngleField field = build_angle_field(grid_h, grid_w);

  SphericalEmbedding e;
  e.grid_h = grid_h;
  e.grid_w = grid_w;
  e.dim = dim;
  e.coeffs = coefficient_series(dim / 4, grid_h);
  e.rows.resize(static_cast<long>(grid_h) * grid_w, dim);
  for (int j = 0; j < grid_h; ++j)
    for (int i = 0; i < grid_w; ++i)
      e.rows.row(static_cast<long>(j) * grid_w + i) =
          embed_cell(field.azimuth[i], field.polar[j], e.coeffs);
  return e;
}

ErpRaster embedding_to_raster(const SphericalEmbedding& e) {
  ErpRaster r(e.dim, static_cast<int>(e.rows.rows()), 1, RasterKind::Embedding);
  for (long row = 0; row < e.rows.rows(); ++row)
    for (int col = 0; col < e.dim; ++col)
      r.at(col, static_cast<int>(row)) = static_cast<float>(e.rows(row, col));
  return r;
}

}  // namespace ps
