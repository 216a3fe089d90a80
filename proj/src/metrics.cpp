#include "quad/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace quad {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double balanced_accuracy(const std::vector<std::pair<Label, Label>>& decisions) {
  long fake_total = 0, fake_correct = 0, real_total = 0, real_correct = 0;
  for (const auto& [predicted, truth] : decisions) {
    if (truth == Label::Fake) {
      ++fake_total;
      if (predicted == Label::Fake) ++fake_correct;
    } else {
      ++real_total;
      if (predicted == Label::Real) ++real_correct;
    }
  }
  if (fake_total == 0 || real_total == 0)
    throw InputError("balanced_accuracy: need at least one example of each class");
  const double tpr = static_cast<double>(fake_correct) / static_cast<double>(fake_total);
  const double tnr = static_cast<double>(real_correct) / static_cast<double>(real_total);
  return (tpr + tnr) / 2.0;
}

double nll(const std::vector<std::pair<double, Label>>& scores) {
  if (scores.empty()) throw InputError("nll: empty input");
  std::vector<double> terms;
  terms.reserve(scores.size());
  for (const auto& [score, truth] : scores) {
    if (!std::isfinite(score)) throw InputError("nll: non-finite fused score");
    double p = sigmoid(score);
    if (truth == Label::Real) p = 1.0 - p;
    p = std::clamp(p, kProbEps, 1.0 - kProbEps);
    terms.push_back(-std::log(p));
  }
  return stable_mean(std::move(terms));
}

EvalResult evaluate(const Dataset& ds, const ScoreFn& method, double threshold) {
  std::vector<std::pair<Label, Label>> decisions;
  std::vector<std::pair<double, Label>> fused;
  decisions.reserve(ds.sets.size());
  fused.reserve(ds.sets.size());

  for (const auto& set : ds.sets) {
    std::optional<Label> truth = set.label;
    if (!truth)
      for (const auto& rec : set.instances)
        if (rec.label) {
          truth = rec.label;
          break;
        }
    if (!truth)
      throw InputError("evaluate: unlabeled query set " + set.source_id);
    const FusedScore fs = method(set);
    const Label predicted = fs.score > threshold ? Label::Fake : Label::Real;
    decisions.emplace_back(predicted, *truth);
    fused.emplace_back(fs.score, *truth);
  }

  EvalResult out;
  out.bacc = balanced_accuracy(decisions);
  out.nll = nll(fused);
  out.n_sources = static_cast<int>(ds.sets.size());
  return out;
}

}  // namespace quad
