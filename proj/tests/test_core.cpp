#include <doctest.h>

#include <cmath>
#include <limits>

#include "quad/core.hpp"
#include "quad/rng.hpp"

using namespace quad;

namespace {

InstanceRecord make_record(const std::string& sid, const std::string& iid,
                           double logit = 0.5, double quality = 0.7) {
  InstanceRecord rec;
  rec.source_id = sid;
  rec.instance_id = iid;
  rec.logit = logit;
  rec.quality = quality;
  rec.label = Label::Fake;
  return rec;
}

Dataset one_set_dataset() {
  Dataset ds;
  QuerySet set;
  set.source_id = "src";
  set.label = Label::Fake;
  set.instances.push_back(make_record("src", "a"));
  ds.sets.push_back(set);
  return ds;
}

}  // namespace

TEST_CASE("validate accepts a minimal valid dataset") {
  CHECK(validate_dataset(one_set_dataset()).empty());
}

TEST_CASE("validate flags non-finite quality with the offending ids") {
  Dataset ds = one_set_dataset();
  ds.sets[0].instances[0].quality = std::numeric_limits<double>::quiet_NaN();
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("quality") != std::string::npos);
  CHECK(v[0].find("src") != std::string::npos);
  CHECK(v[0].find("a") != std::string::npos);
}

TEST_CASE("validate flags duplicate (source_id, instance_id)") {
  Dataset ds = one_set_dataset();
  ds.sets[0].instances.push_back(make_record("src", "a", 1.0));
  const auto v = validate_dataset(ds);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("duplicate") != std::string::npos);
}

TEST_CASE("validate flags metadata inconsistencies") {
  Dataset ds = one_set_dataset();
  auto& rec = ds.sets[0].instances[0];

  SUBCASE("jpeg_qf without a lossy format") {
    rec.meta.jpeg_qf = 90;
    rec.meta.format = ImageFormat::Png;
    CHECK(validate_dataset(ds).size() == 1);
  }
  SUBCASE("jpeg_qf outside [1,100]") {
    rec.meta.jpeg_qf = 120;
    rec.meta.format = ImageFormat::Jpeg;
    CHECK(validate_dataset(ds).size() == 1);
  }
  SUBCASE("tree_level below 1") {
    rec.meta.tree_level = 0;
    CHECK(validate_dataset(ds).size() == 1);
  }
  SUBCASE("tree_level above configured depth") {
    rec.meta.tree_level = 6;
    CHECK(validate_dataset(ds, 5).size() == 1);
    CHECK(validate_dataset(ds).empty());  // unchecked without a depth
  }
  SUBCASE("label disagreeing with the set label") {
    rec.label = Label::Real;
    CHECK(!validate_dataset(ds).empty());
  }
  SUBCASE("duplicate source_id across sets") {
    Dataset two = one_set_dataset();
    QuerySet copy = two.sets[0];
    copy.instances[0].instance_id = "b";
    two.sets.push_back(copy);
    CHECK(validate_dataset(two).size() == 1);
  }
}

TEST_CASE("validate is pure") {
  Dataset ds = one_set_dataset();
  ds.sets[0].instances[0].logit = std::numeric_limits<double>::infinity();
  CHECK(validate_dataset(ds) == validate_dataset(ds));
}

TEST_CASE("stable_sum is invariant under permutation") {
  Rng rng(7);
  std::vector<double> values;
  for (int i = 0; i < 50; ++i) values.push_back(rng.normal(0.0, 3.0));
  const double expected = stable_sum(values);
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(values);
    CHECK(stable_sum(values) == expected);
  }
}

TEST_CASE("label and format parsing round-trips") {
  CHECK(parse_label("fake") == Label::Fake);
  CHECK(parse_label("0") == Label::Real);
  CHECK(!parse_label("2"));
  CHECK(parse_format("JPEG") == ImageFormat::Jpeg);
  CHECK(parse_format(to_string(ImageFormat::Webp)) == ImageFormat::Webp);
  CHECK(!parse_format("gif"));
}

TEST_CASE("deterministic rng streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(derive_stream(1, "x") != derive_stream(1, "y"));
  CHECK(derive_stream(1, "x") == derive_stream(1, "x"));
}

TEST_CASE("rng uniform_int stays in range and hits both endpoints") {
  Rng rng(3);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(2, 5);
    CHECK(v >= 2);
    CHECK(v <= 5);
    lo = lo || v == 2;
    hi = hi || v == 5;
  }
  CHECK(lo);
  CHECK(hi);
}
