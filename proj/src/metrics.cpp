// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#include "panosphere/metrics.hpp"

#include <cmath>

namespace ps {
namespace {

GridD apply_alignment(const GridD& pred, const GridD& gt, const GridD& valid,
                      AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::None: return pred;
    case AlignmentMode::Median: return median_align(pred, gt, valid);
    case AlignmentMode::Affine: return affine_align(pred, gt, valid);
  }
  throw ConfigError("unknown alignment mode");
}

}  // namespace

MetricReport eval_pair(const GridD& pred, const GridD& gt, const GridD& valid,
                       const MetricOptions& opt) {
  long n = 0;
  for (long u = 0; u < gt.cols(); ++u)
    for (long v = 0; v < gt.rows(); ++v)
      if (valid(v, u) != 0.0) {
        if (!(gt(v, u) > 0.0))
          throw DomainError("eval_pair: nonpositive ground truth inside mask");
        ++n;
      }
  if (n == 0) throw AlignmentError("eval_pair: empty valid set");

  const GridD aligned = apply_alignment(pred, gt, valid, opt.alignment);

  Eigen::VectorXd abs_rel(n), sq(n);
  long d1 = 0, d2 = 0, i = 0;
  for (long u = 0; u < gt.cols(); ++u)
    for (long v = 0; v < gt.rows(); ++v) {
      if (valid(v, u) == 0.0) continue;
      const double p = aligned(v, u), g = gt(v, u);
      const double err = p - g;
      abs_rel[i] = std::abs(err) / g;
      sq[i] = err * err;
      const double ratio = std::max(g / p, p / g);
      if (ratio < 1.25) ++d1;
      if (ratio < 1.25 * 1.25) ++d2;
      ++i;
    }

  MetricReport r;
  r.alignment = opt.alignment;
  r.n_valid = n;
  r.absrel = 100.0 * pairwise_sum(abs_rel) / n;
  const double sum_sq = pairwise_sum(sq);
  r.rmse = 100.0 * (opt.rmse_mean_outside_root ? std::sqrt(sum_sq) / n
                                               : std::sqrt(sum_sq / n));
  r.delta1 = 100.0 * d1 / n;
  r.delta2 = 100.0 * d2 / n;
  return r;
}

MetricReport eval_pair(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask, const MetricOptions& opt) {
  const GridD valid = mask ? raster_to_grid(*mask)
                           : GridD::Ones(gt.height, gt.width);
  return eval_pair(raster_to_grid(pred), raster_to_grid(gt), valid, opt);
}

DatasetReport eval_dataset(const std::vector<EvalPair>& pairs,
                           const DatasetOptions& opt) {
  if (pairs.empty()) throw ConfigError("eval_dataset: no pairs");

  DatasetReport out;
  out.mean.alignment = opt.alignment;

  if (opt.pool_pixels) {
    // concatenate every valid pixel into one flat evaluation
    std::vector<double> ps, gs;
    for (size_t k = 0; k < pairs.size(); ++k) {
      try {
        const GridD pred = raster_to_grid(pairs[k].pred);
        const GridD gt = raster_to_grid(pairs[k].gt);
        const GridD valid = pairs[k].mask
                                ? raster_to_grid(*pairs[k].mask)
                                : GridD::Ones(gt.rows(), gt.cols());
        const GridD aligned = apply_alignment(pred, gt, valid, opt.alignment);
        for (long u = 0; u < gt.cols(); ++u)
          for (long v = 0; v < gt.rows(); ++v)
            if (valid(v, u) != 0.0) {
              ps.push_back(aligned(v, u));
              gs.push_back(gt(v, u));
            }
        ++out.n_pairs;
      } catch (const Error& e) {
        out.errors.push_back("pair " + std::to_string(k) + ": " + e.what());
      }
    }
    if (ps.empty()) throw AlignmentError("eval_dataset: no valid pixels");
    GridD pred(1, static_cast<long>(ps.size())), gt(1, static_cast<long>(gs.size()));
    for (size_t i = 0; i < ps.size(); ++i) {
      pred(0, static_cast<long>(i)) = ps[i];
      gt(0, static_cast<long>(i)) = gs[i];
    }
    MetricOptions pooled = opt;
    pooled.alignment = AlignmentMode::None;  // already aligned per image
    out.mean = eval_pair(pred, gt, GridD::Ones(1, pred.cols()), pooled);
    out.mean.alignment = opt.alignment;
    return out;
  }

  double absrel = 0, rmse = 0, d1 = 0, d2 = 0;
  long n_valid = 0;
  for (size_t k = 0; k < pairs.size(); ++k) {
    try {
      const MetricReport r = eval_pair(
          pairs[k].pred, pairs[k].gt,
          pairs[k].mask ? &*pairs[k].mask : nullptr, opt);
      absrel += r.absrel;
      rmse += r.rmse;
      d1 += r.delta1;
      d2 += r.delta2;
      n_valid += r.n_valid;
      ++out.n_pairs;
    } catch (const Error& e) {
      out.errors.push_back("pair " + std::to_string(k) + ": " + e.what());
    }
  }
  if (out.n_pairs == 0) throw AlignmentError("eval_dataset: every pair failed");
  out.mean.absrel = absrel / out.n_pairs;
  out.mean.rmse = rmse / out.n_pairs;
  out.mean.delta1 = d1 / out.n_pairs;
  out.mean.delta2 = d2 / out.n_pairs;
  out.mean.n_valid = n_valid;
  return out;
}

std::string to_string(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::None: return "none";
    case AlignmentMode::Median: return "median";
    case AlignmentMode::Affine: return "affine";
  }
  return "?";
}

AlignmentMode alignment_from_string(const std::string& s) {
  if (s == "none") return AlignmentMode::None;
  if (s == "median") return AlignmentMode::Median;
  if (s == "affine") return AlignmentMode::Affine;
  throw ConfigError("unknown alignment mode: " + s);
}

}  // namespace ps
