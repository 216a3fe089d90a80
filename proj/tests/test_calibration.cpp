#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "quad/calibration.hpp"
#include "quad/core.hpp"
#include "quad/rng.hpp"

using namespace quad;

namespace {

// Independent oracle: difference of Gaussian log-densities.
double log_pdf(double x, double mu, double sigma) {
  static const double kLogSqrt2Pi = 0.5 * std::log(2.0 * 3.14159265358979323846);
  const double z = (x - mu) / sigma;
  return -kLogSqrt2Pi - std::log(sigma) - 0.5 * z * z;
}

CalibrationModel make_model(ClassCoefficients real, ClassCoefficients fake) {
  CalibrationModel m;
  m.real = real;
  m.fake = fake;
  m.q_min = 0.0;
  m.q_max = 1.0;
  return m;
}

// With these coefficients the corrected logit equals the raw logit.
CalibrationModel identity_model() {
  return make_model({0.0, -0.5, 0.0, 0.0}, {0.0, 0.5, 0.0, 0.0});
}

QuerySet set_with_logits(const std::vector<double>& logits) {
  QuerySet set;
  set.source_id = "s";
  set.label = Label::Fake;
  int i = 0;
  for (double l : logits) {
    InstanceRecord rec;
    rec.source_id = "s";
    rec.instance_id = "i" + std::to_string(i++);
    rec.logit = l;
    rec.quality = 0.5;
    set.instances.push_back(rec);
  }
  return set;
}

Dataset two_class_dataset(const ClassCoefficients& true_real,
                          const ClassCoefficients& true_fake, int n_per_class,
                          std::uint64_t seed) {
  Dataset ds;
  Rng rng(seed);
  for (const Label label : {Label::Real, Label::Fake}) {
    QuerySet set;
    set.source_id = label == Label::Real ? "real_src" : "fake_src";
    set.label = label;
    const auto& c = label == Label::Real ? true_real : true_fake;
    for (int i = 0; i < n_per_class; ++i) {
      InstanceRecord rec;
      rec.source_id = set.source_id;
      rec.instance_id = "n" + std::to_string(i);
      rec.label = label;
      const double q = rng.uniform();
      rec.quality = q;
      rec.logit = rng.normal(c.a * q + c.b, std::exp((c.alpha * q + c.beta) / 2.0));
      set.instances.push_back(std::move(rec));
    }
    ds.sets.push_back(std::move(set));
  }
  return ds;
}

}  // namespace

TEST_CASE("normalize_quality clamps to the dev range") {
  CalibrationModel m = identity_model();
  m.q_min = 2.0;
  m.q_max = 6.0;
  CHECK(normalize_quality(2.0, m) == 0.0);
  CHECK(normalize_quality(6.0, m) == 1.0);
  CHECK(normalize_quality(8.0, m) == 1.0);
  CHECK(normalize_quality(1.0, m) == 0.0);
  CHECK(normalize_quality(4.0, m) == doctest::Approx(0.5));
  CHECK_THROWS_AS(normalize_quality(std::numeric_limits<double>::quiet_NaN(), m),
                  InputError);
}

TEST_CASE("class_stats evaluates the linear mean and log-linear spread") {
  const auto [mu1, sigma1] = class_stats(0.7, {0.0, 3.0, 0.0, 0.0});
  CHECK(mu1 == 3.0);
  CHECK(sigma1 == 1.0);

  const auto [mu2, sigma2] = class_stats(0.5, {4.0, -1.0, -2.0, 0.5});
  CHECK(mu2 == doctest::Approx(1.0));
  CHECK(sigma2 == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));

  const auto [mu3, sigma3] = class_stats(0.0, {4.0, -1.0, -2.0, 0.5});
  CHECK(mu3 == -1.0);
  CHECK(sigma3 == doctest::Approx(std::exp(0.25)).epsilon(1e-12));
}

TEST_CASE("corrected_logit matches hand-evaluated cases") {
  // mu0 = -2, mu1 = 2, unit variance
  const auto m = make_model({0.0, -2.0, 0.0, 0.0}, {0.0, 2.0, 0.0, 0.0});
  CHECK(corrected_logit(0.0, 0.3, m) == 0.0);
  CHECK(corrected_logit(2.0, 0.3, m) == 8.0);

  // identical means, sigma1 = 2 sigma0: overlap penalizes the fake class
  const auto m2 = make_model({0.0, 0.0, 0.0, 0.0},
                             {0.0, 0.0, 0.0, std::log(4.0)});
  CHECK(corrected_logit(0.0, 0.9, m2) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("corrected_logit equals the Gaussian log-pdf ratio") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto m = make_model(
        {rng.uniform(-6, 6), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2, 2)},
        {rng.uniform(-6, 6), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2, 2)});
    const double q = rng.uniform();
    const double l = rng.uniform(-10, 10);
    const auto [mu0, s0] = class_stats(q, m.real);
    const auto [mu1, s1] = class_stats(q, m.fake);
    const double oracle = log_pdf(l, mu1, s1) - log_pdf(l, mu0, s0);
    CHECK(std::abs(corrected_logit(l, q, m) - oracle) < 1e-9);
  }
}

TEST_CASE("identical class distributions yield a zero corrected logit") {
  const ClassCoefficients c{1.5, -0.3, -0.8, 0.4};
  const auto m = make_model(c, c);
  Rng rng(5);
  for (int i = 0; i < 200; ++i)
    CHECK(corrected_logit(rng.uniform(-20, 20), rng.uniform(), m) == 0.0);
}

TEST_CASE("fuse_corrected sums corrected logits with a strict-positive rule") {
  const auto m = identity_model();

  const auto single = fuse_corrected(set_with_logits({3.2}), m);
  CHECK(single.score == doctest::Approx(3.2));
  CHECK(single.decision == Label::Fake);
  CHECK(single.per_instance.size() == 1);

  const auto mixed = fuse_corrected(set_with_logits({1.0, -0.5, -0.4}), m);
  CHECK(mixed.score == doctest::Approx(0.1));
  CHECK(mixed.decision == Label::Fake);

  const auto tie = fuse_corrected(set_with_logits({-1.0, 1.0}), m);
  CHECK(tie.score == 0.0);
  CHECK(tie.decision == Label::Real);  // strict > 0

  CHECK_THROWS_AS(fuse_corrected(set_with_logits({}), m), InputError);
}

TEST_CASE("fuse_corrected is invariant to instance order") {
  const auto m = make_model({-2.0, 1.0, -1.0, 0.6}, {3.0, -0.5, -1.5, 0.8});
  Rng rng(23);
  std::vector<double> logits;
  for (int i = 0; i < 40; ++i) logits.push_back(rng.normal(0.0, 4.0));
  QuerySet set = set_with_logits(logits);
  for (std::size_t i = 0; i < set.instances.size(); ++i)
    set.instances[i].quality = rng.uniform();

  const double expected = fuse_corrected(set, m).score;
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(set.instances);
    CHECK(fuse_corrected(set, m).score == expected);
  }
}

TEST_CASE("fit recovers the generating coefficients") {
  const ClassCoefficients true_real{-3.0, 0.5, -1.0, 0.2};
  const ClassCoefficients true_fake{4.0, -1.0, -2.0, 0.5};
  const Dataset dev = two_class_dataset(true_real, true_fake, 10000, 2024);

  const CalibrationModel model = fit(dev);
  CHECK(std::abs(model.real.a - true_real.a) < 0.1);
  CHECK(std::abs(model.real.b - true_real.b) < 0.1);
  CHECK(std::abs(model.real.alpha - true_real.alpha) < 0.1);
  CHECK(std::abs(model.real.beta - true_real.beta) < 0.1);
  CHECK(std::abs(model.fake.a - true_fake.a) < 0.1);
  CHECK(std::abs(model.fake.b - true_fake.b) < 0.1);
  CHECK(std::abs(model.fake.alpha - true_fake.alpha) < 0.1);
  CHECK(std::abs(model.fake.beta - true_fake.beta) < 0.1);

  CHECK(model.fit_meta.n_dev_real == 10000);
  CHECK(model.fit_meta.n_dev_fake == 10000);
  CHECK(model.fit_meta.dev_sources.size() == 2);
}

TEST_CASE("fit reduces to ordinary least squares under constant variance") {
  // Paired residuals +-delta at every quality make the variance exactly
  // constant, so the heteroscedastic MLE and OLS coincide.
  Dataset ds;
  const double delta = 0.3;
  for (const Label label : {Label::Real, Label::Fake}) {
    QuerySet set;
    set.source_id = label == Label::Real ? "r" : "f";
    set.label = label;
    const double a = label == Label::Real ? -1.5 : 2.0;
    const double b = label == Label::Real ? 0.4 : -0.7;
    int id = 0;
    for (int i = 0; i < 200; ++i) {
      const double q = static_cast<double>(i) / 199.0;
      for (const double sign : {-1.0, 1.0}) {
        InstanceRecord rec;
        rec.source_id = set.source_id;
        rec.instance_id = "n" + std::to_string(id++);
        rec.label = label;
        rec.quality = q;
        rec.logit = a * q + b + sign * delta;
        set.instances.push_back(std::move(rec));
      }
    }
    ds.sets.push_back(std::move(set));
  }

  const CalibrationModel model = fit(ds);

  // Independent OLS on the fake class.
  double mq = 0.0, ml = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& rec : ds.sets[1].instances) pts.emplace_back(rec.quality, rec.logit);
  for (const auto& [q, l] : pts) {
    mq += q;
    ml += l;
  }
  mq /= static_cast<double>(pts.size());
  ml /= static_cast<double>(pts.size());
  double sqq = 0.0, sql = 0.0;
  for (const auto& [q, l] : pts) {
    sqq += (q - mq) * (q - mq);
    sql += (q - mq) * (l - ml);
  }
  const double ols_a = sql / sqq;
  const double ols_b = ml - ols_a * mq;

  CHECK(std::abs(model.fake.a - ols_a) < 1e-6);
  CHECK(std::abs(model.fake.b - ols_b) < 1e-6);
  CHECK(std::abs(model.fake.alpha) < 1e-6);
  CHECK(model.fake.beta == doctest::Approx(std::log(delta * delta)).epsilon(1e-6));
}

TEST_CASE("fit handles the zero-residual degenerate case") {
  Dataset ds;
  for (const Label label : {Label::Real, Label::Fake}) {
    QuerySet set;
    set.source_id = label == Label::Real ? "r" : "f";
    set.label = label;
    for (int i = 0; i < 50; ++i) {
      InstanceRecord rec;
      rec.source_id = set.source_id;
      rec.instance_id = "n" + std::to_string(i);
      rec.label = label;
      rec.quality = static_cast<double>(i) / 49.0;
      rec.logit = label == Label::Fake ? 3.0 : -2.0;  // constant per class
      set.instances.push_back(std::move(rec));
    }
    ds.sets.push_back(std::move(set));
  }
  const CalibrationModel model = fit(ds);
  CHECK(std::abs(model.fake.a) < 1e-9);
  CHECK(model.fake.b == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::abs(model.real.a) < 1e-9);
  CHECK(model.real.b == doctest::Approx(-2.0).epsilon(1e-9));
  // implied variance stays positive
  CHECK(std::exp(model.fake.alpha * 0.5 + model.fake.beta) > 0.0);
}

TEST_CASE("fit rejects unusable development data") {
  SUBCASE("single class") {
    Dataset ds = two_class_dataset({0, 0, 0, 0}, {0, 0, 0, 0}, 100, 1);
    ds.sets.pop_back();  // drop the fake class
    CHECK_THROWS_AS(fit(ds), InputError);
  }
  SUBCASE("degenerate quality") {
    Dataset ds = two_class_dataset({0, 0, 0, 0}, {0, 0, 0, 0}, 100, 1);
    for (auto& set : ds.sets)
      for (auto& rec : set.instances) rec.quality = 0.5;
    CHECK_THROWS_AS(fit(ds), InputError);
  }
  SUBCASE("unlabeled data") {
    Dataset ds = two_class_dataset({0, 0, 0, 0}, {0, 0, 0, 0}, 100, 1);
    for (auto& set : ds.sets) {
      set.label.reset();
      for (auto& rec : set.instances) rec.label.reset();
    }
    CHECK_THROWS_AS(fit(ds), InputError);
  }
}

TEST_CASE("fit is deterministic and decreases the objective") {
  const Dataset dev =
      two_class_dataset({-2.0, 0.3, -0.5, 0.1}, {3.0, -0.8, -1.0, 0.4}, 3000, 77);
  const CalibrationModel m1 = fit(dev);
  const CalibrationModel m2 = fit(dev);
  CHECK(m1 == m2);
  CHECK(m1.fit_meta.nll_final_real <= m1.fit_meta.nll_init_real);
  CHECK(m1.fit_meta.nll_final_fake <= m1.fit_meta.nll_init_fake);

  // Final objective is reproducible from the returned coefficients.
  std::vector<QLSample> samples;
  for (const auto& rec : dev.sets[1].instances)
    samples.push_back({(rec.quality - m1.q_min) / (m1.q_max - m1.q_min), rec.logit});
  const double p[4] = {m1.fake.a, m1.fake.b, m1.fake.alpha, m1.fake.beta};
  CHECK(fit_nll(samples, p) == doctest::Approx(m1.fit_meta.nll_final_fake).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(31);
  std::vector<QLSample> samples;
  for (int i = 0; i < 200; ++i)
    samples.push_back({rng.uniform(), rng.normal(0.0, 2.0)});

  const double h = 1e-5;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> p = {rng.uniform(-5, 5), rng.uniform(-3, 3),
                             rng.uniform(-3, 3), rng.uniform(-2, 2)};
    const auto grad = fit_nll_gradient(samples, p);
    double worst = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::vector<double> lo = p, hi = p;
      lo[i] -= h;
      hi[i] += h;
      const double fd = (fit_nll(samples, hi) - fit_nll(samples, lo)) / (2.0 * h);
      worst = std::max(worst, std::abs(grad[i] - fd));
      scale = std::max(scale, std::abs(grad[i]));
    }
    CHECK(worst / scale < 1e-4);
  }
}

TEST_CASE("loo_fit drops exactly the held-out source") {
  Dataset ds;
  Rng rng(13);
  for (const std::string sid : {"A", "B", "C"}) {
    QuerySet set;
    set.source_id = sid;
    set.label = sid == "B" ? Label::Real : Label::Fake;
    for (int i = 0; i < 30; ++i) {
      InstanceRecord rec;
      rec.source_id = sid;
      rec.instance_id = "n" + std::to_string(i);
      rec.label = set.label;
      rec.quality = rng.uniform();
      rec.logit = rng.normal(set.label == Label::Fake ? 2.0 : -2.0, 1.0);
      set.instances.push_back(std::move(rec));
    }
    ds.sets.push_back(std::move(set));
  }
  // Extra real source so that holding out B keeps both classes.
  QuerySet extra;
  extra.source_id = "D";
  extra.label = Label::Real;
  for (int i = 0; i < 30; ++i) {
    InstanceRecord rec;
    rec.source_id = "D";
    rec.instance_id = "n" + std::to_string(i);
    rec.label = Label::Real;
    rec.quality = rng.uniform();
    rec.logit = rng.normal(-2.0, 1.0);
    extra.instances.push_back(std::move(rec));
  }
  ds.sets.push_back(extra);

  Dataset without_b;
  for (const auto& set : ds.sets)
    if (set.source_id != "B") without_b.sets.push_back(set);

  CHECK(loo_fit(ds, "B") == fit(without_b));
  CHECK_THROWS_AS(loo_fit(ds, "nope"), InputError);

  // Holding out each source in turn fits without crashing.
  for (const auto& set : ds.sets) (void)loo_fit(ds, set.source_id);

  Dataset single;
  single.sets.push_back(ds.sets[0]);
  CHECK_THROWS_AS(loo_fit(single, ds.sets[0].source_id), InputError);
}

TEST_CASE("second-order fit recovers a quadratic mean") {
  Dataset ds;
  Rng rng(99);
  for (const Label label : {Label::Real, Label::Fake}) {
    QuerySet set;
    set.source_id = label == Label::Real ? "r" : "f";
    set.label = label;
    const double a2 = label == Label::Fake ? 2.0 : -1.5;
    const double a = label == Label::Fake ? 1.0 : -0.5;
    const double b = 0.5;
    for (int i = 0; i < 10000; ++i) {
      InstanceRecord rec;
      rec.source_id = set.source_id;
      rec.instance_id = "n" + std::to_string(i);
      rec.label = label;
      const double q = rng.uniform();
      rec.quality = q;
      rec.logit = rng.normal(a2 * q * q + a * q + b, std::exp((-1.0 * q + 0.2) / 2.0));
      set.instances.push_back(std::move(rec));
    }
    ds.sets.push_back(std::move(set));
  }
  FitConfig cfg;
  cfg.model_order = 2;
  const CalibrationModel model = fit(ds, cfg);
  REQUIRE(model.fake_quad.has_value());
  REQUIRE(model.real_quad.has_value());
  CHECK(std::abs(*model.fake_quad - 2.0) < 0.2);
  CHECK(std::abs(*model.real_quad + 1.5) < 0.2);
  CHECK(model.model_order == 2);

  // order-1 models carry no quadratic slot
  const CalibrationModel linear = fit(ds);
  CHECK(!linear.real_quad);
  CHECK(!linear.fake_quad);
}
