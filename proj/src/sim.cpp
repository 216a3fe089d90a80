#include "quad/sim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace quad {

OpKind op_kind(const DegradationOp& op) {
  if (std::holds_alternative<CropOp>(op)) return OpKind::Crop;
  if (std::holds_alternative<ResizeOp>(op)) return OpKind::Resize;
  return OpKind::Compress;
}

double op_intensity(const DegradationOp& op) {
  if (const auto* c = std::get_if<CropOp>(&op)) return 1.0 - c->keep_fraction;
  if (const auto* r = std::get_if<ResizeOp>(&op))
    return std::abs(std::log2(static_cast<double>(r->short_side) / 1024.0));
  const auto& z = std::get<CompressOp>(op);
  return (100.0 - static_cast<double>(z.qf)) / 100.0;
}

std::vector<double> PipelineConfig::default_qf_weights() {
  // Triangular density on [50, 100] with mode 88; stand-in for the
  // high-quality-heavy QF histogram observed in real repostings.
  constexpr double lo = 50.0, hi = 100.0, mode = 88.0;
  std::vector<double> w(100, 0.0);
  for (int qf = 50; qf <= 100; ++qf) {
    const double x = static_cast<double>(qf);
    if (x <= mode)
      w[qf - 1] = 2.0 * (x - lo) / ((hi - lo) * (mode - lo));
    else
      w[qf - 1] = 2.0 * (hi - x) / ((hi - lo) * (hi - mode));
  }
  return w;
}

namespace {

int sample_weighted_qf(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InputError("sample_pipeline: qf_weights sum to zero");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(weights.size());
}

}  // namespace

std::vector<DegradationOp> sample_pipeline(Rng& rng, const PipelineConfig& cfg) {
  std::vector<DegradationOp> ops;
  if (rng.bernoulli(cfg.p_crop)) {
    CropOp c;
    c.axis = rng.uniform_int(0, 1) == 0 ? CropAxis::Width : CropAxis::Height;
    c.keep_fraction = rng.uniform(cfg.crop_keep_min, cfg.crop_keep_max);
    c.offset_fraction = rng.uniform();
    ops.emplace_back(c);
  }
  if (rng.bernoulli(cfg.p_resize)) {
    ResizeOp r;
    r.short_side = static_cast<int>(rng.uniform_int(cfg.resize_min, cfg.resize_max));
    r.backend = rng.uniform_int(0, 1) == 0 ? ResizeBackend::LibA : ResizeBackend::LibB;
    switch (rng.uniform_int(0, 2)) {
      case 0: r.interpolation = Interpolation::Bilinear; break;
      case 1: r.interpolation = Interpolation::Bicubic; break;
      default: r.interpolation = Interpolation::Lanczos; break;
    }
    ops.emplace_back(r);
  }
  if (rng.bernoulli(cfg.p_compress)) {
    CompressOp z;
    z.format = rng.bernoulli(cfg.jpeg_fraction) ? CodecFormat::Jpeg : CodecFormat::Webp;
    z.qf = sample_weighted_qf(rng, cfg.qf_weights);
    // Two JPEG encoders in the wild; WebP kept on a single one.
    z.encoder = z.format == CodecFormat::Jpeg
                    ? (rng.uniform_int(0, 1) == 0 ? Encoder::EncA : Encoder::EncB)
                    : Encoder::EncA;
    ops.emplace_back(z);
  }
  return ops;
}

DegradationTree generate_tree(const std::string& source_id,
                              std::optional<Label> label, std::uint64_t seed,
                              const TreeConfig& cfg) {
  if (cfg.depth < 1 || cfg.first_level_branching < 1 || cfg.later_branching < 1)
    throw InputError("generate_tree: depth and branching must be >= 1");

  DegradationTree tree;
  tree.source_id = source_id;
  tree.depth = cfg.depth;
  tree.seed = seed;
  tree.label = label;
  tree.base_width = cfg.base_width;
  tree.base_height = cfg.base_height;

  Rng rng(seed);

  TreeNode root;
  root.node_id = "root";
  root.level = 0;
  tree.nodes.push_back(root);

  std::vector<std::size_t> prev_level = {0};
  for (int level = 1; level <= cfg.depth; ++level) {
    const int branching =
        level == 1 ? cfg.first_level_branching : cfg.later_branching;
    std::vector<std::size_t> this_level;
    for (std::size_t parent_index : prev_level) {
      for (int c = 1; c <= branching; ++c) {
        const TreeNode& parent = tree.nodes[parent_index];
        TreeNode node;
        node.node_id = parent.level == 0 ? std::to_string(c)
                                         : parent.node_id + "." + std::to_string(c);
        node.parent_id = parent.node_id;
        node.level = level;
        node.ops_from_parent = sample_pipeline(rng, cfg.pipeline);
        double edge = 0.0;
        for (const auto& op : node.ops_from_parent) edge += op_intensity(op);
        node.cumulative_severity = parent.cumulative_severity + edge;
        this_level.push_back(tree.nodes.size());
        tree.nodes.push_back(std::move(node));
      }
    }
    prev_level = std::move(this_level);
  }
  return tree;
}

namespace {

struct NodeState {
  int width = 0;
  int height = 0;
  std::optional<CompressOp> last_compress;
  double weighted_severity = 0.0;
};

int scaled_dim(double value) {
  return std::max(1, static_cast<int>(std::lround(value)));
}

void apply_op(NodeState& st, const DegradationOp& op, const SeverityWeights& w) {
  if (const auto* c = std::get_if<CropOp>(&op)) {
    if (c->axis == CropAxis::Width)
      st.width = scaled_dim(st.width * c->keep_fraction);
    else
      st.height = scaled_dim(st.height * c->keep_fraction);
    st.weighted_severity += w.crop * op_intensity(op);
  } else if (const auto* r = std::get_if<ResizeOp>(&op)) {
    const double shorter = static_cast<double>(std::min(st.width, st.height));
    const double scale = static_cast<double>(r->short_side) / shorter;
    st.width = scaled_dim(st.width * scale);
    st.height = scaled_dim(st.height * scale);
    st.weighted_severity += w.resize * op_intensity(op);
  } else {
    st.last_compress = std::get<CompressOp>(op);
    st.weighted_severity += w.compress * op_intensity(op);
  }
}

}  // namespace

std::vector<InstanceRecord> simulate_observations(const DegradationTree& tree,
                                                  Label label,
                                                  const ObservationModelConfig& cfg,
                                                  Rng& rng) {
  if (!(cfg.q_clean > 0.0) || !std::isfinite(cfg.q_clean))
    throw InputError("simulate_observations: q_clean must be positive");

  std::unordered_map<std::string, NodeState> states;
  states.reserve(tree.nodes.size());

  std::vector<InstanceRecord> records;
  records.reserve(tree.nodes.size());

  for (const auto& node : tree.nodes) {
    NodeState st;
    if (!node.parent_id) {
      st.width = tree.base_width;
      st.height = tree.base_height;
    } else {
      const auto it = states.find(*node.parent_id);
      if (it == states.end())
        throw InputError("simulate_observations: node before its parent: " +
                         node.node_id);
      st = it->second;
      for (const auto& op : node.ops_from_parent)
        apply_op(st, op, cfg.severity_weights);
    }
    states.emplace(node.node_id, st);
    if (!node.parent_id) continue;  // root is the clean image, never exported

    const double noise = rng.normal(0.0, 1.0) * cfg.quality_noise_sd;
    const double q =
        std::clamp(cfg.q_clean - st.weighted_severity + noise, 0.0, cfg.q_clean);
    const double q_norm = q / cfg.q_clean;
    const auto& coeffs = label == Label::Fake ? cfg.true_fake : cfg.true_real;
    const auto [mu, sigma] = class_stats(q_norm, coeffs);

    InstanceRecord rec;
    rec.source_id = tree.source_id;
    rec.instance_id = node.node_id;
    rec.quality = q;
    rec.logit = rng.normal(mu, sigma);
    rec.label = label;
    rec.meta.width = st.width;
    rec.meta.height = st.height;
    if (st.last_compress) {
      rec.meta.format = st.last_compress->format == CodecFormat::Jpeg
                            ? ImageFormat::Jpeg
                            : ImageFormat::Webp;
      rec.meta.jpeg_qf = st.last_compress->qf;
    }
    rec.meta.tree_level = node.level;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<InstanceRecord> subsample_availability(
    const std::vector<InstanceRecord>& records, int n_available, Rng& rng) {
  const int n = static_cast<int>(records.size());
  if (n_available < 1 || n_available > n)
    throw InputError("subsample_availability: n_available out of [1, " +
                     std::to_string(n) + "]");
  std::vector<int> idx(records.size());
  for (int i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first n_available entries are a uniform subset.
  for (int i = 0; i < n_available; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, n - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_available);
  std::sort(idx.begin(), idx.end());  // keep original order
  std::vector<InstanceRecord> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(records[i]);
  return out;
}

}  // namespace quad
