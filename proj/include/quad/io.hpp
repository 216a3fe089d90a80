#pragma once
// File formats: dataset CSV/JSON, calibration-model JSON, evaluation-report
// JSON and text tables, degradation-tree manifests, and simulator configs.
// Doubles are written with shortest round-trip formatting everywhere.

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quad/calibration.hpp"
#include "quad/core.hpp"
#include "quad/metrics.hpp"
#include "quad/sim.hpp"

namespace quad {

std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// 16-hex-digit digest of a canonical JSON dump; echoed by every report.
std::string config_digest(const nlohmann::json& config);

// --- dataset ---

// Canonical CSV header:
//   source_id,instance_id,logit,quality,label,width,height,jpeg_qf,format,
//   timestamp,tree_level
// Empty cells mean absent. An optional checksum column is recognized on
// input (used for duplicate dropping) and never written.
std::string dataset_to_csv(const Dataset& ds);
nlohmann::json dataset_to_json(const Dataset& ds);

struct ParsedRow {
  InstanceRecord record;
  std::optional<std::string> checksum;
  int line = 0;  // 1-based source line (or record index for JSON)
};

// Parse only; no filters. Throws InputError listing offending lines.
std::vector<ParsedRow> parse_dataset_csv(std::string_view text);
std::vector<ParsedRow> parse_dataset_json(const nlohmann::json& doc);

// Group rows into query sets (first-appearance source order).
Dataset group_rows(std::vector<ParsedRow> rows);

struct IngestOptions {
  int min_short_side = 256;          // 0 disables; skipped when dims absent
  int min_instances_per_source = 10; // >= 1
  bool drop_duplicate_checksums = true;
};

struct IngestStats {
  long rows_read = 0;
  long dropped_short_side = 0;
  long dropped_duplicate_checksum = 0;
  long dropped_small_sources = 0;       // whole sources
  long dropped_rows_small_sources = 0;  // their rows
  long rows_kept = 0;
  int sources_kept = 0;
};

struct IngestResult {
  Dataset dataset;
  IngestStats stats;
};

// Reads .csv or .json (by extension) and applies the filters above.
IngestResult ingest(const std::filesystem::path& path,
                    const IngestOptions& opts = {});

void write_dataset(const Dataset& ds, const std::filesystem::path& path);

// --- calibration model ---

nlohmann::json model_to_json(const CalibrationModel& model);
CalibrationModel model_from_json(const nlohmann::json& doc);
void write_model(const CalibrationModel& model, const std::filesystem::path& path);
CalibrationModel read_model(const std::filesystem::path& path);

// --- evaluation report ---

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

// Aligned text table, one bacc/nll column per named report (methods as rows).
std::string render_report_table(
    std::span<const std::pair<std::string, EvalReport>> reports);
std::string render_report_table(const EvalReport& report);

// --- tree manifests ---

nlohmann::json tree_to_json(const DegradationTree& tree);
DegradationTree tree_from_json(const nlohmann::json& doc);

// --- simulator config ---

struct SimConfig {
  int sources_real = 100;
  int sources_fake = 1000;
  std::uint64_t seed = 0;
  TreeConfig tree;
  ObservationModelConfig observation;
};

nlohmann::json sim_config_to_json(const SimConfig& cfg);
// Missing keys keep the values already present in `base`.
SimConfig sim_config_from_json(const nlohmann::json& doc, SimConfig base = {});

}  // namespace quad
