#include "quad/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "quad/rng.hpp"
#include "quad/sim.hpp"

namespace quad {

SplitResult split_sources(const Dataset& ds, double dev_fraction,
                          std::uint64_t seed) {
  if (!(dev_fraction > 0.0) || !(dev_fraction < 1.0))
    throw InputError("split_sources: dev_fraction must lie in (0, 1)");

  // Strata: real, fake, unlabeled. Canonical id order before shuffling so the
  // split is independent of set storage order.
  std::map<int, std::vector<std::string>> strata;
  for (const auto& set : ds.sets) {
    const int s = set.label ? static_cast<int>(*set.label) : 2;
    strata[s].push_back(set.source_id);
  }

  std::set<std::string> dev_ids;
  for (auto& [stratum, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_stream(seed, "split/" + std::to_string(stratum)));
    rng.shuffle(ids);
    const auto n_dev = static_cast<std::size_t>(
        std::floor(dev_fraction * static_cast<double>(ids.size())));
    for (std::size_t i = 0; i < n_dev; ++i) dev_ids.insert(ids[i]);
  }

  SplitResult out;
  out.dev.schema_version = ds.schema_version;
  out.eval.schema_version = ds.schema_version;
  for (const auto& set : ds.sets) {
    if (dev_ids.contains(set.source_id))
      out.dev.sets.push_back(set);
    else
      out.eval.sets.push_back(set);
  }
  return out;
}

namespace {

struct MeanAccumulator {
  double bacc = 0.0;
  double nll = 0.0;
  int n_sources = 0;
  int count = 0;

  void add(const EvalResult& r) {
    bacc += r.bacc;
    nll += r.nll;
    n_sources = r.n_sources;
    ++count;
  }
  EvalResult mean() const {
    return {bacc / count, nll / count, n_sources};
  }
};

EvalRow make_row(const std::string& method, const std::string& k) {
  EvalRow row;
  row.method = method;
  row.k = k;
  return row;
}

// Runs the computation; on failure the row is marked unavailable.
template <typename Fn>
EvalRow guarded_row(std::string method, std::string k, Fn&& compute) {
  EvalRow row = make_row(std::move(method), std::move(k));
  try {
    const EvalResult r = compute();
    row.bacc = r.bacc;
    row.nll = r.nll;
    row.n_sources = r.n_sources;
  } catch (const std::exception& e) {
    row.available = false;
    row.note = e.what();
  }
  return row;
}

}  // namespace

EvalReport run_standard_evaluation(const Dataset& ds,
                                   const CalibrationModel* model,
                                   const ProtocolOptions& opts) {
  if (ds.sets.empty()) throw InputError("run_standard_evaluation: empty dataset");

  EvalReport report;
  auto eval_strategy = [&](RankingStrategy strategy, std::uint64_t seed) {
    return evaluate(
        ds,
        [&, strategy, seed](const QuerySet& set) {
          return aggregate_topk(set, strategy, seed);
        },
        opts.threshold);
  };

  // random single instance, averaged over seeded repetitions
  report.rows.push_back(guarded_row("random", "1", [&] {
    MeanAccumulator acc;
    for (int rep = 0; rep < std::max(1, opts.random_repeats); ++rep)
      acc.add(eval_strategy({RankKind::Random, 1},
                            derive_stream(opts.seed, "random/" + std::to_string(rep))));
    return acc.mean();
  }));

  // naive mean over all instances (ranking irrelevant at k = ALL)
  report.rows.push_back(guarded_row("naive", "all", [&] {
    return eval_strategy({RankKind::Random, std::nullopt}, opts.seed);
  }));

  // oracle: first-level instances only, when levels are known
  const bool has_levels = std::any_of(ds.sets.begin(), ds.sets.end(), [](const QuerySet& s) {
    return std::any_of(s.instances.begin(), s.instances.end(),
                       [](const InstanceRecord& r) { return r.meta.tree_level.has_value(); });
  });
  if (has_levels) {
    report.rows.push_back(guarded_row("oracle", "L1", [&] {
      return evaluate(
          ds, [](const QuerySet& set) { return oracle_level(set, 1); },
          opts.threshold);
    }));
  }

  for (const RankKind kind :
       {RankKind::Qf, RankKind::Size, RankKind::Date, RankKind::Iqa}) {
    for (int k : opts.ks) {
      report.rows.push_back(guarded_row(to_string(kind), std::to_string(k), [&] {
        return eval_strategy({kind, k}, opts.seed);
      }));
    }
  }

  report.rows.push_back(guarded_row("quad", "all", [&]() -> EvalResult {
    if (!model) throw InputError("no calibration model supplied");
    return evaluate(
        ds,
        [model](const QuerySet& set) { return fuse_corrected(set, *model); },
        opts.threshold);
  }));

  if (opts.loo) {
    report.rows.push_back(guarded_row("quad*", "all", [&] {
      return evaluate_loo(ds, opts.fit_config, opts.threshold);
    }));
  }

  {
    // Digest of the protocol inputs; callers may overwrite with a fuller one.
    std::string blob = "ks=";
    for (int k : opts.ks) blob += std::to_string(k) + ",";
    blob += ";reps=" + std::to_string(opts.random_repeats);
    blob += ";seed=" + std::to_string(opts.seed);
    blob += ";loo=" + std::to_string(opts.loo);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    report.config_digest = buf;
  }
  return report;
}

EvalResult evaluate_loo(const Dataset& ds, const FitConfig& fit_config,
                        double threshold, int* n_fits) {
  if (ds.sets.size() < 2)
    throw InputError("evaluate_loo: need at least two sources");

  std::vector<std::pair<Label, Label>> decisions;
  std::vector<std::pair<double, Label>> fused;
  int fits = 0;
  for (const auto& set : ds.sets) {
    std::optional<Label> truth = set.label;
    if (!truth)
      for (const auto& rec : set.instances)
        if (rec.label) {
          truth = rec.label;
          break;
        }
    if (!truth) throw InputError("evaluate_loo: unlabeled query set " + set.source_id);

    const CalibrationModel model = loo_fit(ds, set.source_id, fit_config);
    ++fits;
    const FusedScore fs = fuse_corrected(set, model);
    decisions.emplace_back(fs.score > threshold ? Label::Fake : Label::Real, *truth);
    fused.emplace_back(fs.score, *truth);
  }
  if (n_fits) *n_fits = fits;

  EvalResult out;
  out.bacc = balanced_accuracy(decisions);
  out.nll = nll(fused);
  out.n_sources = static_cast<int>(ds.sets.size());
  return out;
}

std::vector<SweepRow> run_availability_sweep(const Dataset& ds,
                                             const CalibrationModel& model,
                                             const SweepOptions& opts) {
  if (opts.repeats < 1) throw InputError("run_availability_sweep: repeats must be >= 1");
  for (int n : opts.grid)
    if (n < 1) throw InputError("run_availability_sweep: grid values must be >= 1");

  struct MethodDef {
    const char* name;
    std::function<FusedScore(const QuerySet&)> score;
  };
  const std::uint64_t seed = opts.seed;
  const std::vector<MethodDef> methods = {
      {"naive",
       [seed](const QuerySet& s) {
         return aggregate_topk(s, {RankKind::Random, std::nullopt}, seed);
       }},
      {"IQA top-10",
       [seed](const QuerySet& s) { return aggregate_topk(s, {RankKind::Iqa, 10}, seed); }},
      {"quad", [&model](const QuerySet& s) { return fuse_corrected(s, model); }},
  };

  std::vector<SweepRow> rows;
  for (int n : opts.grid) {
    std::vector<MeanAccumulator> acc(methods.size());
    for (int rep = 0; rep < opts.repeats; ++rep) {
      Dataset sub;
      sub.schema_version = ds.schema_version;
      for (const auto& set : ds.sets) {
        QuerySet s;
        s.source_id = set.source_id;
        s.label = set.label;
        const int take = std::min<int>(n, static_cast<int>(set.instances.size()));
        Rng rng(derive_stream(seed, "avail/" + std::to_string(rep) + "/" +
                                        std::to_string(n) + "/" + set.source_id));
        s.instances = subsample_availability(set.instances, take, rng);
        sub.sets.push_back(std::move(s));
      }
      for (std::size_t m = 0; m < methods.size(); ++m)
        acc[m].add(evaluate(sub, methods[m].score, opts.threshold));
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const EvalResult r = acc[m].mean();
      rows.push_back({n, methods[m].name, r.bacc, r.nll});
    }
  }
  return rows;
}

}  // namespace quad
