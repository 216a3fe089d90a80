#pragma once
// Evaluation protocol: source-level dev/eval splits, the standard method
// grid (random / naive / oracle-L1 / ranked top-K / calibrated fusion),
// leave-one-out scoring, and the availability sweep.

#include <cstdint>
#include <vector>

#include "quad/baselines.hpp"
#include "quad/calibration.hpp"
#include "quad/core.hpp"
#include "quad/metrics.hpp"

namespace quad {

struct SplitResult {
  Dataset dev;
  Dataset eval;
};

// Seeded source-granularity split, stratified by set label so both classes
// land in both halves. floor(dev_fraction * n) sources per stratum go to dev.
SplitResult split_sources(const Dataset& ds, double dev_fraction,
                          std::uint64_t seed);

struct ProtocolOptions {
  std::vector<int> ks = {1, 10, 20};
  int random_repeats = 10;  // random-single row is averaged over this many seeds
  std::uint64_t seed = 0;
  double threshold = 0.0;
  bool loo = false;  // add a leave-one-out calibrated row ("quad*")
  FitConfig fit_config;
};

// The full method grid. Rows whose requirements are unmet (missing metadata,
// missing model) are marked unavailable with a reason instead of aborting.
// The oracle L1 row appears only when some instance carries a tree level.
EvalReport run_standard_evaluation(const Dataset& ds,
                                   const CalibrationModel* model,
                                   const ProtocolOptions& opts);

// Calibrated evaluation where each source is scored by a model fitted on all
// other sources. n_fits (when given) receives the number of fits performed.
EvalResult evaluate_loo(const Dataset& ds, const FitConfig& fit_config,
                        double threshold = 0.0, int* n_fits = nullptr);

struct SweepOptions {
  std::vector<int> grid = {1, 2, 4, 8, 16, 32, 64, 124};
  std::uint64_t seed = 0;
  int repeats = 1;
  double threshold = 0.0;
};

struct SweepRow {
  int n_available = 0;
  std::string method;  // "naive", "IQA top-10", "quad"
  double bacc = 0.0;
  double nll = 0.0;
};

// For each grid point n, scores per-source uniform subsets of n instances
// with naive, IQA-top-10 and calibrated fusion; averaged over repeats.
std::vector<SweepRow> run_availability_sweep(const Dataset& ds,
                                             const CalibrationModel& model,
                                             const SweepOptions& opts);

}  // namespace quad
