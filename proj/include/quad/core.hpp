#pragma once
// Shared data model: one near-duplicate observation (logit + quality +
// metadata), the set of observations sharing a source image, and datasets
// of such sets. All types are immutable-by-convention value types.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quad {

// Bad inputs and violated preconditions. CLI exit code 1.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown (non-finite objective, failed optimization). CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Label : int { Real = 0, Fake = 1 };

enum class ImageFormat { Jpeg, Webp, Png, Other };

inline bool is_lossy(ImageFormat f) {
  return f == ImageFormat::Jpeg || f == ImageFormat::Webp;
}

const char* to_string(Label label);
const char* to_string(ImageFormat format);
std::optional<Label> parse_label(std::string_view text);
std::optional<ImageFormat> parse_format(std::string_view text);

struct InstanceMeta {
  std::optional<int> width;   // pixels
  std::optional<int> height;  // pixels
  std::optional<int> jpeg_qf;  // last lossy quality factor, [1, 100]
  std::optional<ImageFormat> format;
  std::optional<std::int64_t> timestamp;  // seconds since epoch
  std::optional<int> tree_level;          // >= 1; root level 0 is never exported

  bool operator==(const InstanceMeta&) const = default;
};

struct InstanceRecord {
  std::string source_id;
  std::string instance_id;
  double logit = 0.0;    // detector log posterior ratio, fake over real
  double quality = 0.0;  // raw no-reference quality index
  std::optional<Label> label;
  InstanceMeta meta;

  bool operator==(const InstanceRecord&) const = default;
};

struct QuerySet {
  std::string source_id;
  std::optional<Label> label;
  std::vector<InstanceRecord> instances;

  bool operator==(const QuerySet&) const = default;
};

struct Dataset {
  std::vector<QuerySet> sets;
  std::string schema_version = "1";

  bool operator==(const Dataset&) const = default;
};

// Effective label of a record: its own label, else the set label.
std::optional<Label> effective_label(const QuerySet& set, const InstanceRecord& rec);

// Descriptions of every invariant violation; empty means valid. Pure.
// max_tree_level bounds meta.tree_level from above when provided.
std::vector<std::string> validate_dataset(
    const Dataset& ds, std::optional<int> max_tree_level = std::nullopt);

// Sum/mean accumulated in ascending value order, so the result depends only
// on the multiset of values, never on input permutation.
double stable_sum(std::vector<double> values);
double stable_mean(std::vector<double> values);

}  // namespace quad
