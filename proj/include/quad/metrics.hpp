#pragma once
// Balanced accuracy and negative log-likelihood over per-source fused
// decisions, plus the per-dataset evaluation driver.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "quad/calibration.hpp"  // FusedScore
#include "quad/core.hpp"

namespace quad {

struct EvalRow {
  std::string method;
  std::string k;  // "1", "10", "20", "all", "L1"
  double bacc = 0.0;
  double nll = 0.0;
  int n_sources = 0;
  bool available = true;
  std::string note;  // reason when unavailable

  bool operator==(const EvalRow&) const = default;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string config_digest;

  bool operator==(const EvalReport&) const = default;
};

// Probability clamp used when turning fused scores into NLL terms.
inline constexpr double kProbEps = 1e-7;

// (TPR + TNR) / 2 over (predicted, truth) pairs. Requires both truth classes.
double balanced_accuracy(const std::vector<std::pair<Label, Label>>& decisions);

// Mean of -log p with p = sigmoid(score) for fake truth, 1 - sigmoid(score)
// for real truth, clamped to [kProbEps, 1 - kProbEps].
double nll(const std::vector<std::pair<double, Label>>& scores);

double sigmoid(double x);

struct EvalResult {
  double bacc = 0.0;
  double nll = 0.0;
  int n_sources = 0;
};

using ScoreFn = std::function<FusedScore(const QuerySet&)>;

// One fused decision per labeled query set; predicted fake iff
// score > threshold.
EvalResult evaluate(const Dataset& ds, const ScoreFn& method,
                    double threshold = 0.0);

}  // namespace quad
