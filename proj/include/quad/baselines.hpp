#pragma once
// Comparison strategies: random single instance, naive all-instance mean,
// oracle first-level mean, and top-K aggregation of raw logits under
// QF / size / date / IQA rankings.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quad/calibration.hpp"  // FusedScore
#include "quad/core.hpp"

namespace quad {

enum class RankKind { Random, Qf, Size, Date, Iqa };

const char* to_string(RankKind kind);

struct RankingStrategy {
  RankKind kind = RankKind::Iqa;
  std::optional<int> k;  // nullopt means ALL; otherwise k >= 1
};

// Deterministic total order of instance ids under the strategy.
//   QF:   lossless formats first, then descending jpeg_qf, missing last
//   SIZE: descending width*height, missing last
//   DATE: ascending timestamp, missing last
//   IQA:  descending quality
//   RANDOM: seeded shuffle (canonicalized, so storage order is irrelevant)
// Ties break by ascending instance_id. Throws when the required attribute
// is absent from every instance.
std::vector<std::string> rank_instances(const QuerySet& set,
                                        const RankingStrategy& strategy,
                                        std::uint64_t seed);

// Arithmetic mean of the raw logits of the top min(k, N) instances;
// decision fake iff the mean is strictly positive.
FusedScore aggregate_topk(const QuerySet& set, const RankingStrategy& strategy,
                          std::uint64_t seed);

// Mean of raw logits over instances at the given tree level.
FusedScore oracle_level(const QuerySet& set, int level);

}  // namespace quad
