#pragma once
// Seeded degradation-tree simulator. Trees carry per-edge operation
// manifests (crop / resize / compress with full parameters, no pixels);
// a synthetic observation model turns manifests into (quality, logit)
// records so the whole pipeline can be tested end to end.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "quad/calibration.hpp"  // ClassCoefficients
#include "quad/core.hpp"
#include "quad/rng.hpp"

namespace quad {

enum class CropAxis { Width, Height };
enum class ResizeBackend { LibA, LibB };
enum class Interpolation { Bilinear, Bicubic, Lanczos };
enum class CodecFormat { Jpeg, Webp };
enum class Encoder { EncA, EncB };

struct CropOp {
  CropAxis axis = CropAxis::Width;
  double keep_fraction = 1.0;    // in [0.6, 0.999]
  double offset_fraction = 0.0;  // in [0, 1], position of the kept window
  bool operator==(const CropOp&) const = default;
};

struct ResizeOp {
  int short_side = 1024;  // in [256, 2048]
  ResizeBackend backend = ResizeBackend::LibA;
  Interpolation interpolation = Interpolation::Bilinear;
  bool operator==(const ResizeOp&) const = default;
};

struct CompressOp {
  CodecFormat format = CodecFormat::Jpeg;
  int qf = 90;  // in [1, 100]
  Encoder encoder = Encoder::EncA;
  bool operator==(const CompressOp&) const = default;
};

using DegradationOp = std::variant<CropOp, ResizeOp, CompressOp>;

enum class OpKind { Crop, Resize, Compress };

OpKind op_kind(const DegradationOp& op);

// Severity contribution of one op:
//   crop      1 - keep_fraction
//   resize    |log2(short_side / 1024)|
//   compress  (100 - qf) / 100
double op_intensity(const DegradationOp& op);

struct PipelineConfig {
  double p_crop = 0.5;
  double p_resize = 0.6;
  double p_compress = 0.95;
  double crop_keep_min = 0.6;
  double crop_keep_max = 0.999;
  int resize_min = 256;
  int resize_max = 2048;
  double jpeg_fraction = 0.85;  // remainder is WebP
  // Weight of quality factor qf at index qf-1; need not be normalized.
  std::vector<double> qf_weights;

  PipelineConfig() : qf_weights(default_qf_weights()) {}

  static std::vector<double> default_qf_weights();
};

// One edge pipeline: crop with p_crop, resize with p_resize, compress with
// p_compress, always in CROP -> RESIZE -> COMPRESS order.
std::vector<DegradationOp> sample_pipeline(Rng& rng,
                                           const PipelineConfig& cfg = {});

struct TreeNode {
  std::string node_id;
  std::optional<std::string> parent_id;  // absent for root
  int level = 0;                         // root 0
  std::vector<DegradationOp> ops_from_parent;
  // Unit-weight intensity sum along the root path; observation models apply
  // their own per-kind weights on top of the stored ops.
  double cumulative_severity = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct TreeConfig {
  int depth = 5;
  int first_level_branching = 4;
  int later_branching = 2;
  int base_width = 2048;  // clean-image dimensions used for metadata
  int base_height = 1536;
  PipelineConfig pipeline;
};

struct DegradationTree {
  std::string source_id;
  int depth = 5;
  std::vector<TreeNode> nodes;  // level order, root first
  std::uint64_t seed = 0;
  std::optional<Label> label;
  int base_width = 2048;
  int base_height = 1536;

  bool operator==(const DegradationTree&) const = default;
};

// Level sizes with defaults: 4, 8, 16, 32, 64 (124 non-root nodes).
// Fully reproducible from (source_id, seed).
DegradationTree generate_tree(const std::string& source_id,
                              std::optional<Label> label, std::uint64_t seed,
                              const TreeConfig& cfg = {});

struct SeverityWeights {
  double crop = 0.25;
  double resize = 0.12;
  double compress = 0.45;
};

struct ObservationModelConfig {
  ClassCoefficients true_real{-5.0, 1.5, -2.0, 1.2};
  ClassCoefficients true_fake{5.0, -1.5, -2.0, 1.2};
  double q_clean = 1.0;  // quality of the undegraded image, > 0
  SeverityWeights severity_weights;
  double quality_noise_sd = 0.05;
};

// For each non-root node: quality from degradation severity, logit drawn
// from the class Gaussian at that quality. Metadata (dims, format, QF,
// tree level) is derived from the manifest.
std::vector<InstanceRecord> simulate_observations(const DegradationTree& tree,
                                                  Label label,
                                                  const ObservationModelConfig& cfg,
                                                  Rng& rng);

// Uniform random subset of size n_available, original order preserved.
std::vector<InstanceRecord> subsample_availability(
    const std::vector<InstanceRecord>& records, int n_available, Rng& rng);

}  // namespace quad
