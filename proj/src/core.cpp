#include "quad/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace quad {

const char* to_string(Label label) {
  return label == Label::Fake ? "fake" : "real";
}

const char* to_string(ImageFormat format) {
  switch (format) {
    case ImageFormat::Jpeg: return "JPEG";
    case ImageFormat::Webp: return "WEBP";
    case ImageFormat::Png: return "PNG";
    case ImageFormat::Other: return "OTHER";
  }
  return "OTHER";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::optional<Label> parse_label(std::string_view text) {
  const std::string t = lower(text);
  if (t == "0" || t == "real") return Label::Real;
  if (t == "1" || t == "fake") return Label::Fake;
  return std::nullopt;
}

std::optional<ImageFormat> parse_format(std::string_view text) {
  const std::string t = lower(text);
  if (t == "jpeg" || t == "jpg") return ImageFormat::Jpeg;
  if (t == "webp") return ImageFormat::Webp;
  if (t == "png") return ImageFormat::Png;
  if (t == "other") return ImageFormat::Other;
  return std::nullopt;
}

std::optional<Label> effective_label(const QuerySet& set, const InstanceRecord& rec) {
  return rec.label ? rec.label : set.label;
}

namespace {

std::string key_of(const InstanceRecord& rec) {
  return rec.source_id + "/" + rec.instance_id;
}

}  // namespace

std::vector<std::string> validate_dataset(const Dataset& ds,
                                          std::optional<int> max_tree_level) {
  std::vector<std::string> violations;
  auto report = [&](const std::string& msg) { violations.push_back(msg); };

  std::set<std::string> source_ids;
  std::set<std::string> record_keys;

  for (const auto& set : ds.sets) {
    if (!source_ids.insert(set.source_id).second)
      report("duplicate source_id across sets: " + set.source_id);
    if (set.instances.empty())
      report("empty query set: " + set.source_id);

    for (const auto& rec : set.instances) {
      const std::string key = key_of(rec);
      if (rec.source_id != set.source_id)
        report("record " + key + " stored under set " + set.source_id);
      if (!record_keys.insert(key).second)
        report("duplicate (source_id, instance_id): " + key);
      if (!std::isfinite(rec.logit))
        report("non-finite logit at " + key);
      if (!std::isfinite(rec.quality))
        report("non-finite quality at " + key);
      if (rec.label && set.label && *rec.label != *set.label)
        report("label disagrees with set label at " + key);

      const auto& m = rec.meta;
      if (m.width && *m.width < 1) report("non-positive width at " + key);
      if (m.height && *m.height < 1) report("non-positive height at " + key);
      if (m.jpeg_qf) {
        if (*m.jpeg_qf < 1 || *m.jpeg_qf > 100)
          report("jpeg_qf outside [1,100] at " + key);
        if (!m.format || !is_lossy(*m.format))
          report("jpeg_qf present without a lossy format at " + key);
      }
      if (m.tree_level) {
        if (*m.tree_level < 1)
          report("tree_level below 1 at " + key);
        else if (max_tree_level && *m.tree_level > *max_tree_level)
          report("tree_level above configured depth at " + key);
      }
    }

    // Instance labels must agree with each other even when the set label is absent.
    std::optional<Label> seen;
    for (const auto& rec : set.instances) {
      if (!rec.label) continue;
      if (seen && *seen != *rec.label) {
        report("conflicting instance labels within set " + set.source_id);
        break;
      }
      seen = rec.label;
    }
  }
  return violations;
}

double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) throw InputError("stable_mean: empty input");
  const auto n = static_cast<double>(values.size());
  return stable_sum(std::move(values)) / n;
}

}  // namespace quad
