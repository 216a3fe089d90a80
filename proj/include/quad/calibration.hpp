#pragma once
// Quality-conditioned Gaussian score model: per-class linear mean and
// log-linear variance in normalized quality, fitted by maximum likelihood,
// plus the corrected-logit transform and the fused decision rule.

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "quad/core.hpp"

namespace quad {

struct ClassCoefficients {
  double a = 0.0;      // mean slope per unit normalized quality
  double b = 0.0;      // mean intercept
  double alpha = 0.0;  // log-variance slope
  double beta = 0.0;   // log-variance intercept

  bool operator==(const ClassCoefficients&) const = default;
};

// Provenance recorded by fit().
struct FitMeta {
  int n_dev_real = 0;
  int n_dev_fake = 0;
  double nll_init_real = 0.0;
  double nll_final_real = 0.0;
  double nll_init_fake = 0.0;
  double nll_final_fake = 0.0;
  int iterations_real = 0;
  int iterations_fake = 0;
  std::vector<std::string> dev_sources;

  bool operator==(const FitMeta&) const = default;
};

struct CalibrationModel {
  ClassCoefficients real;  // class y = 0
  ClassCoefficients fake;  // class y = 1
  // q^2 mean coefficient per class; engaged only when model_order == 2.
  std::optional<double> real_quad;
  std::optional<double> fake_quad;
  double q_min = 0.0;
  double q_max = 1.0;
  int model_order = 1;
  FitMeta fit_meta;

  bool operator==(const CalibrationModel&) const = default;
};

struct FitConfig {
  int model_order = 1;  // 1 or 2
  int max_iterations = 500;
  double grad_tolerance = 1e-8;  // on the gradient inf-norm, scaled by max(1, |nll|)
};

struct FusedScore {
  double score = 0.0;
  Label decision = Label::Real;
  std::vector<double> per_instance;  // one entry per instance, set order
};

// Variance floor applied when evaluating the model.
inline constexpr double kMinVariance = 1e-12;

// clamp((q - q_min) / (q_max - q_min), 0, 1). Throws on non-finite q.
double normalize_quality(double q, const CalibrationModel& model);

// (mu, sigma) at normalized quality: mu = a q + b, sigma = exp((alpha q + beta)/2).
std::pair<double, double> class_stats(double q_norm, const ClassCoefficients& c);

// Log-likelihood ratio of the two class Gaussians at (logit, q_norm);
// equals log N(l; mu1, sigma1^2) - log N(l; mu0, sigma0^2).
double corrected_logit(double logit, double q_norm, const CalibrationModel& model);

// Sum of corrected logits over the set; decision fake iff strictly positive.
FusedScore fuse_corrected(const QuerySet& set, const CalibrationModel& model);

// Per-class maximum-likelihood fit on the labeled instances of `dev`.
// Quality is normalized by the dev-set min/max, recorded in the model.
CalibrationModel fit(const Dataset& dev, const FitConfig& config = {});

// fit() on every set except the one matching holdout_source.
CalibrationModel loo_fit(const Dataset& ds, std::string_view holdout_source,
                         const FitConfig& config = {});

// --- fitting internals, exposed for verification ---

struct QLSample {
  double q = 0.0;  // already normalized
  double logit = 0.0;
};

// Per-class negative log-likelihood and its analytic gradient.
// params layout: {a, b, alpha, beta} or {a, b, alpha, beta, a2}.
double fit_nll(std::span<const QLSample> samples, std::span<const double> params);
std::vector<double> fit_nll_gradient(std::span<const QLSample> samples,
                                     std::span<const double> params);

}  // namespace quad
