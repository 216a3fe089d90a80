#include "quad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_map>

#include "quad/rng.hpp"

namespace quad {

const char* to_string(RankKind kind) {
  switch (kind) {
    case RankKind::Random: return "random";
    case RankKind::Qf: return "QF";
    case RankKind::Size: return "Size";
    case RankKind::Date: return "Date";
    case RankKind::Iqa: return "IQA";
  }
  return "?";
}

namespace {

// Sort key: lower category first, then ascending key, then instance_id.
// Category 1 marks instances lacking the ranked attribute (they go last).
struct RankKey {
  int category = 0;
  double key = 0.0;
};

RankKey key_for(const InstanceRecord& rec, RankKind kind) {
  const auto& m = rec.meta;
  switch (kind) {
    case RankKind::Qf:
      // Lossless above all lossy; among lossy, higher QF first.
      if (m.format && *m.format == ImageFormat::Png) return {0, -1000.0};
      if (m.jpeg_qf && m.format && is_lossy(*m.format))
        return {0, -static_cast<double>(*m.jpeg_qf)};
      return {1, 0.0};
    case RankKind::Size:
      if (m.width && m.height)
        return {0, -static_cast<double>(*m.width) * static_cast<double>(*m.height)};
      return {1, 0.0};
    case RankKind::Date:
      if (m.timestamp) return {0, static_cast<double>(*m.timestamp)};
      return {1, 0.0};
    case RankKind::Iqa:
      return {0, -rec.quality};
    case RankKind::Random:
      return {0, 0.0};
  }
  return {1, 0.0};
}

}  // namespace

std::vector<std::string> rank_instances(const QuerySet& set,
                                        const RankingStrategy& strategy,
                                        std::uint64_t seed) {
  if (set.instances.empty())
    throw InputError("rank_instances: empty query set " + set.source_id);
  if (strategy.k && *strategy.k < 1)
    throw InputError("rank_instances: k must be >= 1");

  const std::size_t n = set.instances.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;

  // Canonical starting order so the result is independent of storage order.
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return set.instances[a].instance_id < set.instances[b].instance_id;
  });

  if (strategy.kind == RankKind::Random) {
    Rng rng(derive_stream(seed, "rank/" + set.source_id));
    rng.shuffle(idx);
  } else {
    std::vector<RankKey> keys(n);
    bool any_present = false;
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = key_for(set.instances[i], strategy.kind);
      any_present = any_present || keys[i].category == 0;
    }
    if (!any_present)
      throw InputError(std::string("rank_instances: ") + to_string(strategy.kind) +
                       " attribute absent from every instance of " + set.source_id);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (keys[a].category != keys[b].category)
        return keys[a].category < keys[b].category;
      return keys[a].key < keys[b].key;
    });
  }

  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(set.instances[i].instance_id);
  return out;
}

FusedScore aggregate_topk(const QuerySet& set, const RankingStrategy& strategy,
                          std::uint64_t seed) {
  const auto order = rank_instances(set, strategy, seed);
  const std::size_t take =
      strategy.k ? std::min<std::size_t>(static_cast<std::size_t>(*strategy.k),
                                         order.size())
                 : order.size();

  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(set.instances.size());
  for (std::size_t i = 0; i < set.instances.size(); ++i)
    index.emplace(set.instances[i].instance_id, i);

  FusedScore out;
  out.per_instance.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    out.per_instance.push_back(set.instances[index.at(order[i])].logit);
  out.score = stable_mean(out.per_instance);
  out.decision = out.score > 0.0 ? Label::Fake : Label::Real;
  return out;
}

FusedScore oracle_level(const QuerySet& set, int level) {
  FusedScore out;
  for (const auto& rec : set.instances)
    if (rec.meta.tree_level && *rec.meta.tree_level == level)
      out.per_instance.push_back(rec.logit);
  if (out.per_instance.empty())
    throw InputError("oracle_level: no instance at level " + std::to_string(level) +
                     " in " + set.source_id);
  out.score = stable_mean(out.per_instance);
  out.decision = out.score > 0.0 ? Label::Fake : Label::Real;
  return out;
}

}  // namespace quad
