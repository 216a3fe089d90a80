#pragma once
// Command implementations behind the CLI: each takes a parsed argument
// struct and writes through the given streams, returning the process exit
// code (0 ok, 1 input error, 2 numerical failure).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "quad/io.hpp"
#include "quad/protocol.hpp"

namespace quad {

struct SimulateArgs {
  SimConfig config;  // sources, seed, tree, observation model
  std::optional<std::filesystem::path> config_path;  // JSON overrides
  std::filesystem::path out_dataset;                 // .csv or .json
  std::optional<std::filesystem::path> manifest_dir;
};

struct FitArgs {
  std::filesystem::path dataset;
  std::filesystem::path out_model;
  double split_fraction = 0.5;
  bool no_split = false;  // fit on every source instead of the dev half
  std::uint64_t seed = 0;
  int model_order = 1;
  IngestOptions ingest;
};

struct ScoreArgs {
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::filesystem::path out;  // .csv or .json
  IngestOptions ingest;
};

struct EvaluateArgs {
  // name=path entries; a bare path uses the file stem as its name.
  std::vector<std::string> datasets;
  std::vector<std::filesystem::path> models;  // none, one, or one per dataset
  std::optional<std::filesystem::path> out_json;
  std::optional<std::filesystem::path> out_table;
  bool exclude_dev = false;  // drop each model's dev sources before scoring
  bool loo = false;
  std::vector<int> ks = {1, 10, 20};
  int random_repeats = 10;
  std::uint64_t seed = 0;
  int model_order = 1;  // for --loo refits
  IngestOptions ingest;
};

struct SweepArgs {
  std::filesystem::path dataset;
  std::filesystem::path model;
  std::optional<std::filesystem::path> out_json;
  std::vector<int> grid = {1, 2, 4, 8, 16, 32, 64, 124};
  int repeats = 1;
  std::uint64_t seed = 0;
  IngestOptions ingest;
};

struct ValidateArgs {
  std::filesystem::path dataset;
  std::optional<int> max_tree_level;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace quad
