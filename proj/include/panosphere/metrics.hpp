// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "panosphere/losses.hpp"
#include "panosphere/raster.hpp"

namespace ps {

// All values reported in percent: AbsRel, delta1, delta2 are fractions x100,
// RMSE is x100 of its natural unit.
struct MetricReport {
  double absrel = 0.0;
  double rmse = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  long n_valid = 0;
  AlignmentMode alignment = AlignmentMode::Median;
};

struct MetricOptions {
  AlignmentMode alignment = AlignmentMode::Median;
  // RMSE = sqrt(mean(err^2)) when false (conventional, the default); the
  // literal printed form (1/N) * sqrt(sum(err^2)) when true.
  bool rmse_mean_outside_root = false;
};

MetricReport eval_pair(const ErpRaster& pred, const ErpRaster& gt,
                       const ErpRaster* mask = nullptr,
                       const MetricOptions& opt = {});

// Double-precision core used by eval_pair and directly by the toy trainer.
MetricReport eval_pair(const GridD& pred, const GridD& gt, const GridD& valid,
                       const MetricOptions& opt = {});

struct DatasetReport {
  MetricReport mean;      // per-image metrics averaged (see options)
  long n_pairs = 0;       // pairs successfully evaluated
  std::vector<std::string> errors;  // one entry per failed pair
};

struct DatasetOptions : MetricOptions {
  bool pool_pixels = false;  // pool all pixels instead of per-image mean
};

struct EvalPair {
  ErpRaster pred;
  ErpRaster gt;
  std::optional<ErpRaster> mask;
};

DatasetReport eval_dataset(const std::vector<EvalPair>& pairs,
                           const DatasetOptions& opt = {});

std::string to_string(AlignmentMode m);
AlignmentMode alignment_from_string(const std::string& s);

}  // namespace ps
