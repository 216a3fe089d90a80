#include "quad/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace quad {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

std::string config_digest(const json& config) {
  const std::uint64_t h = fnv1a64(config.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// --- dataset CSV ---

namespace {

constexpr const char* kCsvHeader =
    "source_id,instance_id,logit,quality,label,width,height,jpeg_qf,format,"
    "timestamp,tree_level";

template <typename T>
std::optional<T> parse_integer(std::string_view s) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_number(std::string_view s) {
  double value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string dataset_to_csv(const Dataset& ds) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& set : ds.sets) {
    for (const auto& rec : set.instances) {
      out += rec.source_id;
      out += ',';
      out += rec.instance_id;
      out += ',';
      out += format_double(rec.logit);
      out += ',';
      out += format_double(rec.quality);
      out += ',';
      if (rec.label) out += *rec.label == Label::Fake ? "1" : "0";
      out += ',';
      if (rec.meta.width) out += std::to_string(*rec.meta.width);
      out += ',';
      if (rec.meta.height) out += std::to_string(*rec.meta.height);
      out += ',';
      if (rec.meta.jpeg_qf) out += std::to_string(*rec.meta.jpeg_qf);
      out += ',';
      if (rec.meta.format) out += to_string(*rec.meta.format);
      out += ',';
      if (rec.meta.timestamp) out += std::to_string(*rec.meta.timestamp);
      out += ',';
      if (rec.meta.tree_level) out += std::to_string(*rec.meta.tree_level);
      out += '\n';
    }
  }
  return out;
}

std::vector<ParsedRow> parse_dataset_csv(std::string_view text) {
  std::vector<std::string> errors;
  auto fail = [&](int line, const std::string& why) {
    if (errors.size() < 20)
      errors.push_back("line " + std::to_string(line) + ": " + why);
  };

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  if (lines.empty()) throw InputError("dataset CSV: empty file");

  const auto header = split_fields(lines[0]);
  std::map<std::string, std::size_t, std::less<>> columns;
  for (std::size_t i = 0; i < header.size(); ++i)
    columns.emplace(std::string(header[i]), i);
  for (const char* required : {"source_id", "instance_id", "logit", "quality"})
    if (!columns.contains(required))
      throw InputError(std::string("dataset CSV: missing column ") + required);

  auto field = [&](const std::vector<std::string_view>& fields,
                   std::string_view name) -> std::optional<std::string_view> {
    const auto it = columns.find(name);
    if (it == columns.end() || it->second >= fields.size()) return std::nullopt;
    if (fields[it->second].empty()) return std::nullopt;
    return fields[it->second];
  };

  std::vector<ParsedRow> rows;
  rows.reserve(lines.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const int line_no = static_cast<int>(li) + 1;
    const auto fields = split_fields(lines[li]);
    if (fields.size() < header.size()) {
      fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
      continue;
    }
    ParsedRow row;
    row.line = line_no;
    auto& rec = row.record;
    bool ok = true;
    auto need_number = [&](std::string_view name, double& dst) {
      const auto v = field(fields, name);
      if (!v) {
        fail(line_no, std::string(name) + " is required");
        ok = false;
        return;
      }
      const auto parsed = parse_number(*v);
      if (!parsed) {
        fail(line_no, "bad " + std::string(name) + " value '" + std::string(*v) + "'");
        ok = false;
        return;
      }
      dst = *parsed;
    };

    if (const auto v = field(fields, "source_id")) rec.source_id = std::string(*v);
    else { fail(line_no, "source_id is required"); ok = false; }
    if (const auto v = field(fields, "instance_id")) rec.instance_id = std::string(*v);
    else { fail(line_no, "instance_id is required"); ok = false; }
    need_number("logit", rec.logit);
    need_number("quality", rec.quality);

    if (const auto v = field(fields, "label")) {
      const auto parsed = parse_label(*v);
      if (!parsed) { fail(line_no, "bad label '" + std::string(*v) + "'"); ok = false; }
      rec.label = parsed;
    }
    auto opt_int = [&](std::string_view name, std::optional<int>& dst) {
      const auto v = field(fields, name);
      if (!v) return;
      const auto parsed = parse_integer<int>(*v);
      if (!parsed) { fail(line_no, "bad " + std::string(name) + " value '" + std::string(*v) + "'"); ok = false; return; }
      dst = parsed;
    };
    opt_int("width", rec.meta.width);
    opt_int("height", rec.meta.height);
    opt_int("jpeg_qf", rec.meta.jpeg_qf);
    opt_int("tree_level", rec.meta.tree_level);
    if (const auto v = field(fields, "format")) {
      const auto parsed = parse_format(*v);
      if (!parsed) { fail(line_no, "bad format '" + std::string(*v) + "'"); ok = false; }
      rec.meta.format = parsed;
    }
    if (const auto v = field(fields, "timestamp")) {
      const auto parsed = parse_integer<std::int64_t>(*v);
      if (!parsed) { fail(line_no, "bad timestamp '" + std::string(*v) + "'"); ok = false; }
      rec.meta.timestamp = parsed;
    }
    if (const auto v = field(fields, "checksum")) row.checksum = std::string(*v);

    if (ok) rows.push_back(std::move(row));
  }

  if (!errors.empty()) {
    std::string msg = "dataset CSV: " + std::to_string(errors.size()) +
                      " malformed row(s):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  return rows;
}

// --- dataset JSON ---

json dataset_to_json(const Dataset& ds) {
  json records = json::array();
  for (const auto& set : ds.sets) {
    for (const auto& rec : set.instances) {
      json r;
      r["source_id"] = rec.source_id;
      r["instance_id"] = rec.instance_id;
      r["logit"] = rec.logit;
      r["quality"] = rec.quality;
      if (rec.label) r["label"] = static_cast<int>(*rec.label);
      if (rec.meta.width) r["width"] = *rec.meta.width;
      if (rec.meta.height) r["height"] = *rec.meta.height;
      if (rec.meta.jpeg_qf) r["jpeg_qf"] = *rec.meta.jpeg_qf;
      if (rec.meta.format) r["format"] = to_string(*rec.meta.format);
      if (rec.meta.timestamp) r["timestamp"] = *rec.meta.timestamp;
      if (rec.meta.tree_level) r["tree_level"] = *rec.meta.tree_level;
      records.push_back(std::move(r));
    }
  }
  return json{{"schema_version", ds.schema_version}, {"records", std::move(records)}};
}

std::vector<ParsedRow> parse_dataset_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("records") || !doc["records"].is_array())
    throw InputError("dataset JSON: expected an object with a 'records' array");
  std::vector<ParsedRow> rows;
  int index = 0;
  for (const auto& r : doc["records"]) {
    ++index;
    ParsedRow row;
    row.line = index;
    auto& rec = row.record;
    try {
      rec.source_id = r.at("source_id").get<std::string>();
      rec.instance_id = r.at("instance_id").get<std::string>();
      rec.logit = r.at("logit").get<double>();
      rec.quality = r.at("quality").get<double>();
      if (r.contains("label") && !r["label"].is_null()) {
        const auto parsed = r["label"].is_string()
                                ? parse_label(r["label"].get<std::string>())
                                : parse_label(std::to_string(r["label"].get<int>()));
        if (!parsed) throw InputError("bad label");
        rec.label = parsed;
      }
      if (r.contains("width")) rec.meta.width = r["width"].get<int>();
      if (r.contains("height")) rec.meta.height = r["height"].get<int>();
      if (r.contains("jpeg_qf")) rec.meta.jpeg_qf = r["jpeg_qf"].get<int>();
      if (r.contains("format")) {
        const auto parsed = parse_format(r["format"].get<std::string>());
        if (!parsed) throw InputError("bad format");
        rec.meta.format = parsed;
      }
      if (r.contains("timestamp")) rec.meta.timestamp = r["timestamp"].get<std::int64_t>();
      if (r.contains("tree_level")) rec.meta.tree_level = r["tree_level"].get<int>();
      if (r.contains("checksum")) row.checksum = r["checksum"].get<std::string>();
    } catch (const std::exception& e) {
      throw InputError("dataset JSON: record " + std::to_string(index) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset group_rows(std::vector<ParsedRow> rows) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> set_index;
  for (auto& row : rows) {
    auto& rec = row.record;
    const auto it = set_index.find(rec.source_id);
    if (it == set_index.end()) {
      set_index.emplace(rec.source_id, ds.sets.size());
      QuerySet set;
      set.source_id = rec.source_id;
      set.label = rec.label;
      set.instances.push_back(std::move(rec));
      ds.sets.push_back(std::move(set));
    } else {
      QuerySet& set = ds.sets[it->second];
      if (!set.label && rec.label) set.label = rec.label;
      set.instances.push_back(std::move(rec));
    }
  }
  return ds;
}

IngestResult ingest(const std::filesystem::path& path, const IngestOptions& opts) {
  if (opts.min_instances_per_source < 1)
    throw InputError("ingest: min_instances_per_source must be >= 1");

  std::vector<ParsedRow> rows;
  const std::string ext = path.extension().string();
  if (ext == ".json") {
    json doc;
    try {
      doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
      throw InputError("dataset JSON parse error in " + path.string() + ": " + e.what());
    }
    rows = parse_dataset_json(doc);
  } else {
    rows = parse_dataset_csv(read_text_file(path));
  }

  IngestResult out;
  out.stats.rows_read = static_cast<long>(rows.size());

  std::vector<ParsedRow> kept;
  kept.reserve(rows.size());
  std::set<std::string> seen_checksums;
  for (auto& row : rows) {
    if (opts.drop_duplicate_checksums && row.checksum) {
      if (!seen_checksums.insert(*row.checksum).second) {
        ++out.stats.dropped_duplicate_checksum;
        continue;
      }
    }
    const auto& m = row.record.meta;
    if (opts.min_short_side > 0 && m.width && m.height &&
        std::min(*m.width, *m.height) < opts.min_short_side) {
      ++out.stats.dropped_short_side;
      continue;
    }
    kept.push_back(std::move(row));
  }

  Dataset grouped = group_rows(std::move(kept));
  for (auto& set : grouped.sets) {
    if (static_cast<int>(set.instances.size()) < opts.min_instances_per_source) {
      ++out.stats.dropped_small_sources;
      out.stats.dropped_rows_small_sources += static_cast<long>(set.instances.size());
      continue;
    }
    out.stats.rows_kept += static_cast<long>(set.instances.size());
    out.dataset.sets.push_back(std::move(set));
  }
  out.stats.sources_kept = static_cast<int>(out.dataset.sets.size());
  return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (path.extension() == ".json")
    write_text_file(path, dataset_to_json(ds).dump(2) + "\n");
  else
    write_text_file(path, dataset_to_csv(ds));
}

// --- calibration model ---

namespace {

json coeffs_to_json(const ClassCoefficients& c, const std::optional<double>& quad) {
  json out{{"a", c.a}, {"b", c.b}, {"alpha", c.alpha}, {"beta", c.beta}};
  if (quad) out["a2"] = *quad;
  return out;
}

void coeffs_from_json(const json& doc, ClassCoefficients& c,
                      std::optional<double>& quad) {
  c.a = doc.at("a").get<double>();
  c.b = doc.at("b").get<double>();
  c.alpha = doc.at("alpha").get<double>();
  c.beta = doc.at("beta").get<double>();
  if (doc.contains("a2")) quad = doc["a2"].get<double>();
}

}  // namespace

json model_to_json(const CalibrationModel& model) {
  json meta{{"n_dev_real", model.fit_meta.n_dev_real},
            {"n_dev_fake", model.fit_meta.n_dev_fake},
            {"nll_init_real", model.fit_meta.nll_init_real},
            {"nll_final_real", model.fit_meta.nll_final_real},
            {"nll_init_fake", model.fit_meta.nll_init_fake},
            {"nll_final_fake", model.fit_meta.nll_final_fake},
            {"iterations_real", model.fit_meta.iterations_real},
            {"iterations_fake", model.fit_meta.iterations_fake},
            {"dev_sources", model.fit_meta.dev_sources}};
  return json{{"schema_version", "1"},
              {"model_order", model.model_order},
              {"q_min", model.q_min},
              {"q_max", model.q_max},
              {"real", coeffs_to_json(model.real, model.real_quad)},
              {"fake", coeffs_to_json(model.fake, model.fake_quad)},
              {"fit_meta", std::move(meta)}};
}

CalibrationModel model_from_json(const json& doc) {
  CalibrationModel model;
  try {
    model.model_order = doc.at("model_order").get<int>();
    model.q_min = doc.at("q_min").get<double>();
    model.q_max = doc.at("q_max").get<double>();
    coeffs_from_json(doc.at("real"), model.real, model.real_quad);
    coeffs_from_json(doc.at("fake"), model.fake, model.fake_quad);
    if (doc.contains("fit_meta")) {
      const auto& m = doc["fit_meta"];
      auto& fm = model.fit_meta;
      fm.n_dev_real = m.value("n_dev_real", 0);
      fm.n_dev_fake = m.value("n_dev_fake", 0);
      fm.nll_init_real = m.value("nll_init_real", 0.0);
      fm.nll_final_real = m.value("nll_final_real", 0.0);
      fm.nll_init_fake = m.value("nll_init_fake", 0.0);
      fm.nll_final_fake = m.value("nll_final_fake", 0.0);
      fm.iterations_real = m.value("iterations_real", 0);
      fm.iterations_fake = m.value("iterations_fake", 0);
      fm.dev_sources = m.value("dev_sources", std::vector<std::string>{});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  if (!(model.q_min < model.q_max))
    throw InputError("model JSON: q_min must be < q_max");
  if (model.model_order != 1 && model.model_order != 2)
    throw InputError("model JSON: model_order must be 1 or 2");
  return model;
}

void write_model(const CalibrationModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model).dump(2) + "\n");
}

CalibrationModel read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw InputError("model JSON parse error in " + path.string() + ": " + e.what());
  }
}

// --- evaluation report ---

json report_to_json(const EvalReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r{{"method", row.method}, {"k", row.k}, {"available", row.available}};
    if (row.available) {
      r["bacc"] = row.bacc;
      r["nll"] = row.nll;
      r["n_sources"] = row.n_sources;
    } else {
      r["note"] = row.note;
    }
    rows.push_back(std::move(r));
  }
  return json{{"schema_version", "1"},
              {"config_digest", report.config_digest},
              {"rows", std::move(rows)}};
}

EvalReport report_from_json(const json& doc) {
  EvalReport report;
  try {
    report.config_digest = doc.value("config_digest", "");
    for (const auto& r : doc.at("rows")) {
      EvalRow row;
      row.method = r.at("method").get<std::string>();
      row.k = r.at("k").get<std::string>();
      row.available = r.value("available", true);
      if (row.available) {
        row.bacc = r.at("bacc").get<double>();
        row.nll = r.at("nll").get<double>();
        row.n_sources = r.value("n_sources", 0);
      } else {
        row.note = r.value("note", "");
      }
      report.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("report JSON: ") + e.what());
  }
  return report;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

}  // namespace

std::string render_report_table(
    std::span<const std::pair<std::string, EvalReport>> reports) {
  if (reports.empty()) return "";

  // Row identity is (method, k), in first-report order with any extras appended.
  std::vector<std::pair<std::string, std::string>> keys;
  auto have = [&](const std::string& m, const std::string& k) {
    return std::any_of(keys.begin(), keys.end(), [&](const auto& p) {
      return p.first == m && p.second == k;
    });
  };
  for (const auto& [name, report] : reports)
    for (const auto& row : report.rows)
      if (!have(row.method, row.k)) keys.emplace_back(row.method, row.k);

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"method", "k"};
  for (const auto& [name, report] : reports)
    head.push_back(name.empty() ? std::string("bAcc / NLL") : name);
  cells.push_back(head);

  for (const auto& [method, k] : keys) {
    std::vector<std::string> line{method, k};
    for (const auto& [name, report] : reports) {
      const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                                   [&](const EvalRow& r) {
                                     return r.method == method && r.k == k;
                                   });
      if (it == report.rows.end())
        line.push_back("");
      else if (!it->available)
        line.push_back("- (" + (it->note.empty() ? "unavailable" : it->note) + ")");
      else
        line.push_back(fixed(it->bacc * 100.0, 1) + " / " + fixed(it->nll, 2));
    }
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c)
      widths[c] = std::max(widths[c], line[c].size());

  std::string out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out += line[c];
      if (c + 1 < line.size())
        out.append(widths[c] - line[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string render_report_table(const EvalReport& report) {
  const std::pair<std::string, EvalReport> one{"", report};
  return render_report_table(std::span(&one, 1));
}

// --- tree manifests ---

namespace {

const char* axis_name(CropAxis a) { return a == CropAxis::Width ? "W" : "H"; }
const char* backend_name(ResizeBackend b) {
  return b == ResizeBackend::LibA ? "LIB_A" : "LIB_B";
}
const char* interp_name(Interpolation i) {
  switch (i) {
    case Interpolation::Bilinear: return "BILINEAR";
    case Interpolation::Bicubic: return "BICUBIC";
    case Interpolation::Lanczos: return "LANCZOS";
  }
  return "BILINEAR";
}
const char* codec_name(CodecFormat f) {
  return f == CodecFormat::Jpeg ? "JPEG" : "WEBP";
}
const char* encoder_name(Encoder e) { return e == Encoder::EncA ? "ENC_A" : "ENC_B"; }

json op_to_json(const DegradationOp& op) {
  if (const auto* c = std::get_if<CropOp>(&op))
    return json{{"kind", "crop"},
                {"axis", axis_name(c->axis)},
                {"keep_fraction", c->keep_fraction},
                {"offset_fraction", c->offset_fraction}};
  if (const auto* r = std::get_if<ResizeOp>(&op))
    return json{{"kind", "resize"},
                {"short_side", r->short_side},
                {"backend", backend_name(r->backend)},
                {"interpolation", interp_name(r->interpolation)}};
  const auto& z = std::get<CompressOp>(op);
  return json{{"kind", "compress"},
              {"format", codec_name(z.format)},
              {"qf", z.qf},
              {"encoder", encoder_name(z.encoder)}};
}

DegradationOp op_from_json(const json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "crop") {
    CropOp c;
    c.axis = doc.at("axis").get<std::string>() == "W" ? CropAxis::Width
                                                      : CropAxis::Height;
    c.keep_fraction = doc.at("keep_fraction").get<double>();
    c.offset_fraction = doc.at("offset_fraction").get<double>();
    return c;
  }
  if (kind == "resize") {
    ResizeOp r;
    r.short_side = doc.at("short_side").get<int>();
    r.backend = doc.at("backend").get<std::string>() == "LIB_A"
                    ? ResizeBackend::LibA
                    : ResizeBackend::LibB;
    const std::string i = doc.at("interpolation").get<std::string>();
    r.interpolation = i == "BICUBIC" ? Interpolation::Bicubic
                      : i == "LANCZOS" ? Interpolation::Lanczos
                                       : Interpolation::Bilinear;
    return r;
  }
  if (kind == "compress") {
    CompressOp z;
    z.format = doc.at("format").get<std::string>() == "JPEG" ? CodecFormat::Jpeg
                                                             : CodecFormat::Webp;
    z.qf = doc.at("qf").get<int>();
    z.encoder = doc.at("encoder").get<std::string>() == "ENC_B" ? Encoder::EncB
                                                                : Encoder::EncA;
    return z;
  }
  throw InputError("tree manifest: unknown op kind '" + kind + "'");
}

}  // namespace

json tree_to_json(const DegradationTree& tree) {
  json nodes = json::array();
  for (const auto& node : tree.nodes) {
    json ops = json::array();
    for (const auto& op : node.ops_from_parent) ops.push_back(op_to_json(op));
    json n{{"node_id", node.node_id},
           {"level", node.level},
           {"cumulative_severity", node.cumulative_severity},
           {"ops", std::move(ops)}};
    if (node.parent_id) n["parent_id"] = *node.parent_id;
    nodes.push_back(std::move(n));
  }
  json out{{"schema_version", "1"},
           {"source_id", tree.source_id},
           {"depth", tree.depth},
           {"seed", tree.seed},
           {"base_width", tree.base_width},
           {"base_height", tree.base_height},
           {"nodes", std::move(nodes)}};
  if (tree.label) out["label"] = static_cast<int>(*tree.label);
  return out;
}

DegradationTree tree_from_json(const json& doc) {
  DegradationTree tree;
  try {
    tree.source_id = doc.at("source_id").get<std::string>();
    tree.depth = doc.at("depth").get<int>();
    tree.seed = doc.at("seed").get<std::uint64_t>();
    tree.base_width = doc.value("base_width", 2048);
    tree.base_height = doc.value("base_height", 1536);
    if (doc.contains("label"))
      tree.label = doc["label"].get<int>() == 1 ? Label::Fake : Label::Real;
    for (const auto& n : doc.at("nodes")) {
      TreeNode node;
      node.node_id = n.at("node_id").get<std::string>();
      node.level = n.at("level").get<int>();
      node.cumulative_severity = n.at("cumulative_severity").get<double>();
      if (n.contains("parent_id")) node.parent_id = n["parent_id"].get<std::string>();
      for (const auto& op : n.at("ops"))
        node.ops_from_parent.push_back(op_from_json(op));
      tree.nodes.push_back(std::move(node));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("tree manifest JSON: ") + e.what());
  }
  return tree;
}

// --- simulator config ---

namespace {

json class_coeffs_json(const ClassCoefficients& c) {
  return json{{"a", c.a}, {"b", c.b}, {"alpha", c.alpha}, {"beta", c.beta}};
}

ClassCoefficients class_coeffs_from(const json& doc, ClassCoefficients base) {
  base.a = doc.value("a", base.a);
  base.b = doc.value("b", base.b);
  base.alpha = doc.value("alpha", base.alpha);
  base.beta = doc.value("beta", base.beta);
  return base;
}

}  // namespace

json sim_config_to_json(const SimConfig& cfg) {
  const auto& p = cfg.tree.pipeline;
  json pipeline{{"p_crop", p.p_crop},
                {"p_resize", p.p_resize},
                {"p_compress", p.p_compress},
                {"crop_keep_min", p.crop_keep_min},
                {"crop_keep_max", p.crop_keep_max},
                {"resize_min", p.resize_min},
                {"resize_max", p.resize_max},
                {"jpeg_fraction", p.jpeg_fraction},
                {"qf_weights", p.qf_weights}};
  json tree{{"depth", cfg.tree.depth},
            {"first_level_branching", cfg.tree.first_level_branching},
            {"later_branching", cfg.tree.later_branching},
            {"base_width", cfg.tree.base_width},
            {"base_height", cfg.tree.base_height},
            {"pipeline", std::move(pipeline)}};
  const auto& o = cfg.observation;
  json obs{{"true_real", class_coeffs_json(o.true_real)},
           {"true_fake", class_coeffs_json(o.true_fake)},
           {"q_clean", o.q_clean},
           {"severity_weights",
            json{{"crop", o.severity_weights.crop},
                 {"resize", o.severity_weights.resize},
                 {"compress", o.severity_weights.compress}}},
           {"quality_noise_sd", o.quality_noise_sd}};
  return json{{"schema_version", "1"},
              {"sources_real", cfg.sources_real},
              {"sources_fake", cfg.sources_fake},
              {"seed", cfg.seed},
              {"tree", std::move(tree)},
              {"observation", std::move(obs)}};
}

SimConfig sim_config_from_json(const json& doc, SimConfig base) {
  try {
    base.sources_real = doc.value("sources_real", base.sources_real);
    base.sources_fake = doc.value("sources_fake", base.sources_fake);
    base.seed = doc.value("seed", base.seed);
    if (doc.contains("tree")) {
      const auto& t = doc["tree"];
      base.tree.depth = t.value("depth", base.tree.depth);
      base.tree.first_level_branching =
          t.value("first_level_branching", base.tree.first_level_branching);
      base.tree.later_branching = t.value("later_branching", base.tree.later_branching);
      base.tree.base_width = t.value("base_width", base.tree.base_width);
      base.tree.base_height = t.value("base_height", base.tree.base_height);
      if (t.contains("pipeline")) {
        const auto& p = t["pipeline"];
        auto& pl = base.tree.pipeline;
        pl.p_crop = p.value("p_crop", pl.p_crop);
        pl.p_resize = p.value("p_resize", pl.p_resize);
        pl.p_compress = p.value("p_compress", pl.p_compress);
        pl.crop_keep_min = p.value("crop_keep_min", pl.crop_keep_min);
        pl.crop_keep_max = p.value("crop_keep_max", pl.crop_keep_max);
        pl.resize_min = p.value("resize_min", pl.resize_min);
        pl.resize_max = p.value("resize_max", pl.resize_max);
        pl.jpeg_fraction = p.value("jpeg_fraction", pl.jpeg_fraction);
        pl.qf_weights = p.value("qf_weights", pl.qf_weights);
      }
    }
    if (doc.contains("observation")) {
      const auto& o = doc["observation"];
      auto& obs = base.observation;
      if (o.contains("true_real"))
        obs.true_real = class_coeffs_from(o["true_real"], obs.true_real);
      if (o.contains("true_fake"))
        obs.true_fake = class_coeffs_from(o["true_fake"], obs.true_fake);
      obs.q_clean = o.value("q_clean", obs.q_clean);
      if (o.contains("severity_weights")) {
        const auto& w = o["severity_weights"];
        obs.severity_weights.crop = w.value("crop", obs.severity_weights.crop);
        obs.severity_weights.resize = w.value("resize", obs.severity_weights.resize);
        obs.severity_weights.compress =
            w.value("compress", obs.severity_weights.compress);
      }
      obs.quality_noise_sd = o.value("quality_noise_sd", obs.quality_noise_sd);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("simulator config JSON: ") + e.what());
  }
  return base;
}

}  // namespace quad
