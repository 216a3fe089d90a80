#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "quad/baselines.hpp"
#include "quad/rng.hpp"

using namespace quad;

namespace {

InstanceRecord rec(const std::string& iid, double logit, double quality) {
  InstanceRecord r;
  r.source_id = "s";
  r.instance_id = iid;
  r.logit = logit;
  r.quality = quality;
  return r;
}

QuerySet three_instances() {
  QuerySet set;
  set.source_id = "s";
  set.instances = {rec("a", 1.0, 0.2), rec("b", -2.0, 0.9), rec("c", 4.0, 0.5)};
  return set;
}

}  // namespace

TEST_CASE("IQA ranking sorts by descending quality") {
  const auto order = rank_instances(three_instances(), {RankKind::Iqa, {}}, 0);
  CHECK(order == std::vector<std::string>{"b", "c", "a"});
}

TEST_CASE("QF ranking puts lossless above all lossy") {
  QuerySet set;
  set.source_id = "s";
  auto png = rec("png", 0.0, 0.5);
  png.meta.format = ImageFormat::Png;
  auto j95 = rec("j95", 0.0, 0.5);
  j95.meta.format = ImageFormat::Jpeg;
  j95.meta.jpeg_qf = 95;
  auto j80 = rec("j80", 0.0, 0.5);
  j80.meta.format = ImageFormat::Webp;
  j80.meta.jpeg_qf = 80;
  set.instances = {j80, j95, png};

  const auto order = rank_instances(set, {RankKind::Qf, {}}, 0);
  CHECK(order == std::vector<std::string>{"png", "j95", "j80"});
}

TEST_CASE("instances lacking the ranked attribute sort last") {
  QuerySet set;
  set.source_id = "s";
  auto with_ts = rec("x", 0.0, 0.5);
  with_ts.meta.timestamp = 1700000000;
  auto later = rec("y", 0.0, 0.5);
  later.meta.timestamp = 1800000000;
  auto missing = rec("a", 0.0, 0.5);  // would sort first by id
  set.instances = {missing, later, with_ts};

  const auto order = rank_instances(set, {RankKind::Date, {}}, 0);
  CHECK(order == std::vector<std::string>{"x", "y", "a"});
}

TEST_CASE("ranking errors when the attribute is absent from every instance") {
  CHECK_THROWS_AS(rank_instances(three_instances(), {RankKind::Date, {}}, 0),
                  InputError);
  CHECK_THROWS_AS(rank_instances(three_instances(), {RankKind::Qf, {}}, 0),
                  InputError);
  CHECK_THROWS_AS(rank_instances(three_instances(), {RankKind::Size, {}}, 0),
                  InputError);
}

TEST_CASE("SIZE ranks by pixel count with id tie-breaks") {
  QuerySet set;
  set.source_id = "s";
  auto big = rec("b", 0.0, 0.5);
  big.meta.width = 2000;
  big.meta.height = 1000;
  auto small = rec("a", 0.0, 0.5);
  small.meta.width = 100;
  small.meta.height = 100;
  auto same1 = rec("d", 0.0, 0.5);
  same1.meta.width = 500;
  same1.meta.height = 400;
  auto same2 = rec("c", 0.0, 0.5);
  same2.meta.width = 400;
  same2.meta.height = 500;
  set.instances = {small, same1, big, same2};

  const auto order = rank_instances(set, {RankKind::Size, {}}, 0);
  CHECK(order == std::vector<std::string>{"b", "c", "d", "a"});
}

TEST_CASE("random ranking is a seeded permutation") {
  const auto set = three_instances();
  const auto o1 = rank_instances(set, {RankKind::Random, {}}, 42);
  const auto o2 = rank_instances(set, {RankKind::Random, {}}, 42);
  CHECK(o1 == o2);
  const auto o3 = rank_instances(set, {RankKind::Random, {}}, 43);
  CHECK(o1 != o3);  // overwhelmingly likely for 3! orders across seeds
}

TEST_CASE("rankings are permutations and storage-order invariant") {
  Rng rng(8);
  QuerySet set;
  set.source_id = "s";
  for (int i = 0; i < 25; ++i) {
    auto r = rec("i" + std::to_string(i), rng.normal(0, 2), rng.uniform());
    if (rng.bernoulli(0.7)) {
      r.meta.width = static_cast<int>(rng.uniform_int(100, 3000));
      r.meta.height = static_cast<int>(rng.uniform_int(100, 3000));
    }
    if (rng.bernoulli(0.6)) {
      r.meta.format = ImageFormat::Jpeg;
      r.meta.jpeg_qf = static_cast<int>(rng.uniform_int(1, 100));
    }
    if (rng.bernoulli(0.5)) r.meta.timestamp = rng.uniform_int(0, 1000000);
    set.instances.push_back(std::move(r));
  }

  std::multiset<std::string> ids;
  for (const auto& r : set.instances) ids.insert(r.instance_id);

  for (const RankKind kind : {RankKind::Random, RankKind::Qf, RankKind::Size,
                              RankKind::Date, RankKind::Iqa}) {
    const auto order = rank_instances(set, {kind, {}}, 7);
    CHECK(std::multiset<std::string>(order.begin(), order.end()) == ids);

    QuerySet shuffled = set;
    rng.shuffle(shuffled.instances);
    CHECK(rank_instances(shuffled, {kind, {}}, 7) == order);
  }
}

TEST_CASE("aggregate_topk averages raw logits of the top instances") {
  const auto set = three_instances();

  const auto top1 = aggregate_topk(set, {RankKind::Iqa, 1}, 0);
  CHECK(top1.score == -2.0);  // best-quality instance has logit -2
  CHECK(top1.decision == Label::Real);

  const auto all = aggregate_topk(set, {RankKind::Iqa, {}}, 0);
  CHECK(all.score == doctest::Approx(1.0));
  CHECK(all.decision == Label::Fake);

  const auto big_k = aggregate_topk(set, {RankKind::Iqa, 10}, 0);
  CHECK(big_k.score == all.score);  // min(k, N) rule

  const auto single = aggregate_topk(set_with := set, {RankKind::Iqa, 1}, 0);
}

TEST_CASE("k = ALL gives the identical score under every strategy") {
  Rng rng(17);
  QuerySet set;
  set.source_id = "s";
  for (int i = 0; i < 30; ++i) {
    auto r = rec("i" + std::to_string(i), rng.normal(0, 3), rng.uniform());
    r.meta.width = static_cast<int>(rng.uniform_int(200, 4000));
    r.meta.height = static_cast<int>(rng.uniform_int(200, 4000));
    r.meta.format = ImageFormat::Jpeg;
    r.meta.jpeg_qf = static_cast<int>(rng.uniform_int(1, 100));
    r.meta.timestamp = rng.uniform_int(0, 99999);
    set.instances.push_back(std::move(r));
  }
  const double reference = aggregate_topk(set, {RankKind::Random, {}}, 1).score;
  for (const RankKind kind : {RankKind::Random, RankKind::Qf, RankKind::Size,
                              RankKind::Date, RankKind::Iqa})
    for (std::uint64_t seed : {0ull, 5ull, 9ull})
      CHECK(aggregate_topk(set, {kind, {}}, seed).score == reference);
}

TEST_CASE("oracle_level averages exactly the requested level") {
  QuerySet set;
  set.source_id = "s";
  for (int i = 0; i < 6; ++i) {
    auto r = rec("i" + std::to_string(i), i < 2 ? 3.0 : -5.0, 0.5);
    r.meta.tree_level = i < 2 ? 1 : 2;
    set.instances.push_back(std::move(r));
  }
  const auto fs = oracle_level(set, 1);
  CHECK(fs.score == 3.0);
  CHECK(fs.per_instance.size() == 2);
  CHECK(fs.decision == Label::Fake);

  CHECK_THROWS_AS(oracle_level(set, 6), InputError);
}

TEST_CASE("k must be positive when given") {
  CHECK_THROWS_AS(rank_instances(three_instances(), {RankKind::Iqa, 0}, 0),
                  InputError);
}
