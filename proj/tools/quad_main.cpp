// quad CLI: simulate degradation trees, fit the quality-conditioned score
// model, score and evaluate datasets, and run availability sweeps.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "quad/cli_commands.hpp"

namespace {

void add_ingest_flags(CLI::App* cmd, quad::IngestOptions& opts) {
  cmd->add_option("--min-side", opts.min_short_side,
                  "Drop rows whose shorter side is below this (0 disables)")
      ->capture_default_str();
  cmd->add_option("--min-instances", opts.min_instances_per_source,
                  "Drop sources with fewer instances than this")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--keep-duplicates,!--drop-duplicates",
                [&opts](std::int64_t count) {
                  opts.drop_duplicate_checksums = count == 0;
                },
                "Keep rows with duplicate checksums");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality-aware calibration and fusion of detector scores "
               "across near-duplicate images"};
  app.require_subcommand(1);

  quad::SimulateArgs sim;
  std::string sim_config_path, sim_manifest_dir;
  auto* c_sim = app.add_subcommand(
      "simulate", "Generate degradation trees and synthetic score records");
  c_sim->add_option("--sources-real", sim.config.sources_real, "Real sources")
      ->capture_default_str();
  c_sim->add_option("--sources-fake", sim.config.sources_fake, "Fake sources")
      ->capture_default_str();
  c_sim->add_option("--seed", sim.config.seed, "Master seed")->capture_default_str();
  c_sim->add_option("--depth", sim.config.tree.depth, "Tree depth")
      ->capture_default_str();
  c_sim->add_option("--config", sim_config_path,
                    "JSON config overriding tree/observation defaults");
  c_sim->add_option("--out", sim.out_dataset, "Dataset output (.csv or .json)")
      ->required();
  c_sim->add_option("--manifest-dir", sim_manifest_dir,
                    "Directory for per-source tree manifests");

  quad::FitArgs fit;
  auto* c_fit = app.add_subcommand(
      "fit", "Fit the calibration model on a seeded source-level dev split");
  c_fit->add_option("--dataset", fit.dataset, "Labeled dataset")->required();
  c_fit->add_option("--out", fit.out_model, "Model JSON output")->required();
  c_fit->add_option("--split", fit.split_fraction, "Dev fraction, in (0, 1)")
      ->capture_default_str();
  c_fit->add_flag("--no-split", fit.no_split, "Fit on every source");
  c_fit->add_option("--seed", fit.seed, "Split seed")->capture_default_str();
  c_fit->add_option("--model-order", fit.model_order, "1 linear, 2 quadratic mean")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  add_ingest_flags(c_fit, fit.ingest);

  quad::ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Fused calibrated score per source");
  c_score->add_option("--dataset", score.dataset, "Dataset")->required();
  c_score->add_option("--model", score.model, "Model JSON")->required();
  c_score->add_option("--out", score.out, "Scores output (.csv or .json)")->required();
  add_ingest_flags(c_score, score.ingest);

  quad::EvaluateArgs ev;
  std::string ev_out_json, ev_out_table;
  auto* c_eval = app.add_subcommand(
      "evaluate", "Balanced accuracy and NLL for every method row");
  c_eval->add_option("--dataset", ev.datasets,
                     "Dataset path or name=path (repeatable)")
      ->required();
  c_eval->add_option("--model", ev.models, "Model JSON (one, or one per dataset)");
  c_eval->add_option("--out", ev_out_json, "Report JSON output");
  c_eval->add_option("--table", ev_out_table, "Report text-table output");
  c_eval->add_flag("--exclude-dev", ev.exclude_dev,
                   "Drop the model's dev sources before scoring");
  c_eval->add_flag("--loo", ev.loo, "Add a leave-one-out calibrated row (quad*)");
  c_eval->add_option("--ks", ev.ks, "Top-K values for ranking rows")
      ->capture_default_str();
  c_eval->add_option("--random-repeats", ev.random_repeats,
                     "Seeded repetitions for the random-single row")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_eval->add_option("--seed", ev.seed, "Seed")->capture_default_str();
  c_eval->add_option("--model-order", ev.model_order, "Model order for --loo refits")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  add_ingest_flags(c_eval, ev.ingest);

  quad::SweepArgs sweep;
  std::string sweep_out_json;
  auto* c_sweep = app.add_subcommand(
      "sweep", "Performance as a function of the number of available instances");
  c_sweep->add_option("--dataset", sweep.dataset, "Dataset")->required();
  c_sweep->add_option("--model", sweep.model, "Model JSON")->required();
  c_sweep->add_option("--out", sweep_out_json, "Sweep JSON output");
  c_sweep->add_option("--grid", sweep.grid, "Availability grid")->capture_default_str();
  c_sweep->add_option("--repeats", sweep.repeats, "Seeded repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_sweep->add_option("--seed", sweep.seed, "Seed")->capture_default_str();
  add_ingest_flags(c_sweep, sweep.ingest);

  quad::ValidateArgs val;
  int val_max_level = 0;
  auto* c_val = app.add_subcommand("validate", "Check dataset invariants");
  c_val->add_option("--dataset", val.dataset, "Dataset")->required();
  c_val->add_option("--max-tree-level", val_max_level,
                    "Upper bound for tree_level (0 = unchecked)");

  CLI11_PARSE(app, argc, argv);

  if (c_sim->parsed()) {
    if (!sim_config_path.empty()) sim.config_path = sim_config_path;
    if (!sim_manifest_dir.empty()) sim.manifest_dir = sim_manifest_dir;
    return quad::cmd_simulate(sim, std::cout, std::cerr);
  }
  if (c_fit->parsed()) return quad::cmd_fit(fit, std::cout, std::cerr);
  if (c_score->parsed()) return quad::cmd_score(score, std::cout, std::cerr);
  if (c_eval->parsed()) {
    if (!ev_out_json.empty()) ev.out_json = ev_out_json;
    if (!ev_out_table.empty()) ev.out_table = ev_out_table;
    return quad::cmd_evaluate(ev, std::cout, std::cerr);
  }
  if (c_sweep->parsed()) {
    if (!sweep_out_json.empty()) sweep.out_json = sweep_out_json;
    return quad::cmd_sweep(sweep, std::cout, std::cerr);
  }
  if (c_val->parsed()) {
    if (val_max_level > 0) val.max_tree_level = val_max_level;
    return quad::cmd_validate(val, std::cout, std::cerr);
  }
  return 1;
}
