#include "quad/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace quad {

namespace {

// Log-variance is clamped to keep exp() finite and the variance above floor;
// a clamped sample contributes no (alpha, beta) gradient.
const double kLogVarFloor = std::log(kMinVariance);
constexpr double kLogVarCeil = 700.0;

double mean_at(double q, std::span<const double> p) {
  double mu = p[0] * q + p[1];
  if (p.size() == 5) mu += p[4] * q * q;
  return mu;
}

struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

ValueGrad nll_value_grad(std::span<const QLSample> samples,
                         std::span<const double> p) {
  ValueGrad out;
  out.grad.assign(p.size(), 0.0);
  for (const auto& s : samples) {
    const double mu = mean_at(s.q, p);
    const double r = s.logit - mu;
    const double lv = p[2] * s.q + p[3];
    const double lvc = std::clamp(lv, kLogVarFloor, kLogVarCeil);
    const double inv_v = std::exp(-lvc);
    out.value += 0.5 * lvc + 0.5 * r * r * inv_v;
    const double d_mu = -r * inv_v;
    out.grad[0] += d_mu * s.q;
    out.grad[1] += d_mu;
    if (p.size() == 5) out.grad[4] += d_mu * s.q * s.q;
    if (lv == lvc) {
      const double t = 0.5 * (1.0 - r * r * inv_v);
      out.grad[2] += t * s.q;
      out.grad[3] += t;
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct MinimizeResult {
  std::vector<double> x;
  double value_init = 0.0;
  double value_final = 0.0;
  int iterations = 0;
};

// Dense BFGS with Armijo backtracking. Deterministic; monotone in the
// objective. Dimension is at most 5.
MinimizeResult minimize_nll(std::span<const QLSample> samples,
                            std::vector<double> x, const FitConfig& cfg) {
  const std::size_t n = x.size();
  MinimizeResult res;

  ValueGrad vg = nll_value_grad(samples, x);
  if (!std::isfinite(vg.value))
    throw NumericalError("fit: objective is non-finite at the initial point");
  res.value_init = vg.value;

  std::vector<double> h(n * n, 0.0);  // inverse Hessian approximation
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset_h();

  std::vector<double> dir(n), x_new(n), step(n), y(n);
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    if (inf_norm(vg.grad) <= cfg.grad_tolerance * std::max(1.0, std::abs(vg.value)))
      break;

    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d += h[i * n + j] * vg.grad[j];
      dir[i] = -d;
    }
    double slope = dot(dir, vg.grad);
    if (!(slope < 0.0)) {  // fall back to steepest descent
      reset_h();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -vg.grad[i];
      slope = dot(dir, vg.grad);
      if (!(slope < 0.0)) break;
    }

    constexpr double kArmijo = 1e-4;
    double t = 1.0;
    bool accepted = false;
    ValueGrad vg_new;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * dir[i];
      vg_new = nll_value_grad(samples, x_new);
      if (std::isfinite(vg_new.value) &&
          vg_new.value <= vg.value + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no further decrease possible along this direction

    for (std::size_t i = 0; i < n; ++i) {
      step[i] = x_new[i] - x[i];
      y[i] = vg_new.grad[i] - vg.grad[i];
    }
    const double sy = dot(step, y);
    const double sn = std::sqrt(dot(step, step));
    const double yn = std::sqrt(dot(y, y));
    if (sy > 1e-12 * sn * yn) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h[i * n + j] += rho * ((1.0 + rho * yhy) * step[i] * step[j] -
                                 hy[i] * step[j] - step[i] * hy[j]);
    }

    x = x_new;
    vg = vg_new;
  }

  res.x = std::move(x);
  res.value_final = vg.value;
  res.iterations = iter;
  return res;
}

// Ordinary least squares of y on x: returns (slope, intercept).
std::pair<double, double> ols(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return {0.0, my};
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// Warm start: (a, b) from OLS of l on q, (alpha, beta) from OLS of
// log(residual^2 + eps) on q.
std::vector<double> initial_params(std::span<const QLSample> samples, int order) {
  std::vector<double> qs(samples.size()), ls(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    qs[i] = samples[i].q;
    ls[i] = samples[i].logit;
  }
  const auto [a, b] = ols(qs, ls);
  std::vector<double> z(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = ls[i] - (a * qs[i] + b);
    z[i] = std::log(r * r + 1e-12);
  }
  const auto [alpha, beta] = ols(qs, z);
  std::vector<double> p = {a, b, std::clamp(alpha, kLogVarFloor, kLogVarCeil),
                           std::clamp(beta, kLogVarFloor, kLogVarCeil)};
  if (order == 2) p.push_back(0.0);
  return p;
}

struct ClassFit {
  ClassCoefficients coeffs;
  std::optional<double> quad;
  double nll_init = 0.0;
  double nll_final = 0.0;
  int iterations = 0;
  int n_samples = 0;
};

ClassFit fit_class(const std::vector<QLSample>& samples, const FitConfig& cfg) {
  auto r = minimize_nll(samples, initial_params(samples, cfg.model_order), cfg);
  ClassFit out;
  out.coeffs = {r.x[0], r.x[1], r.x[2], r.x[3]};
  if (cfg.model_order == 2) out.quad = r.x[4];
  out.nll_init = r.value_init;
  out.nll_final = r.value_final;
  out.iterations = r.iterations;
  out.n_samples = static_cast<int>(samples.size());
  for (double v : r.x)
    if (!std::isfinite(v)) throw NumericalError("fit: non-finite coefficient");
  return out;
}

double model_mean(double q_norm, const ClassCoefficients& c,
                  const std::optional<double>& quad) {
  double mu = c.a * q_norm + c.b;
  if (quad) mu += *quad * q_norm * q_norm;
  return mu;
}

double model_variance(double q_norm, const ClassCoefficients& c) {
  return std::max(std::exp(c.alpha * q_norm + c.beta), kMinVariance);
}

}  // namespace

double normalize_quality(double q, const CalibrationModel& model) {
  if (!std::isfinite(q)) throw InputError("normalize_quality: non-finite quality");
  if (!(model.q_min < model.q_max))
    throw InputError("normalize_quality: model has q_min >= q_max");
  return std::clamp((q - model.q_min) / (model.q_max - model.q_min), 0.0, 1.0);
}

std::pair<double, double> class_stats(double q_norm, const ClassCoefficients& c) {
  if (!std::isfinite(q_norm)) throw InputError("class_stats: non-finite quality");
  return {c.a * q_norm + c.b, std::sqrt(model_variance(q_norm, c))};
}

double corrected_logit(double logit, double q_norm, const CalibrationModel& model) {
  const double mu0 = model_mean(q_norm, model.real, model.real_quad);
  const double mu1 = model_mean(q_norm, model.fake, model.fake_quad);
  const double v0 = model_variance(q_norm, model.real);
  const double v1 = model_variance(q_norm, model.fake);
  const double r0 = logit - mu0;
  const double r1 = logit - mu1;
  return r0 * r0 / (2.0 * v0) - r1 * r1 / (2.0 * v1) + 0.5 * std::log(v0 / v1);
}

FusedScore fuse_corrected(const QuerySet& set, const CalibrationModel& model) {
  if (set.instances.empty())
    throw InputError("fuse_corrected: empty query set " + set.source_id);
  FusedScore out;
  out.per_instance.reserve(set.instances.size());
  for (const auto& rec : set.instances) {
    const double q = normalize_quality(rec.quality, model);
    out.per_instance.push_back(corrected_logit(rec.logit, q, model));
  }
  out.score = stable_sum(out.per_instance);
  out.decision = out.score > 0.0 ? Label::Fake : Label::Real;
  return out;
}

double fit_nll(std::span<const QLSample> samples, std::span<const double> params) {
  if (params.size() != 4 && params.size() != 5)
    throw InputError("fit_nll: params must hold 4 or 5 coefficients");
  return nll_value_grad(samples, params).value;
}

std::vector<double> fit_nll_gradient(std::span<const QLSample> samples,
                                     std::span<const double> params) {
  if (params.size() != 4 && params.size() != 5)
    throw InputError("fit_nll_gradient: params must hold 4 or 5 coefficients");
  return nll_value_grad(samples, params).grad;
}

CalibrationModel fit(const Dataset& dev, const FitConfig& config) {
  if (config.model_order != 1 && config.model_order != 2)
    throw InputError("fit: model_order must be 1 or 2");

  std::vector<double> raw_q[2];
  std::vector<double> raw_l[2];
  std::vector<std::string> dev_sources;
  for (const auto& set : dev.sets) {
    dev_sources.push_back(set.source_id);
    for (const auto& rec : set.instances) {
      const auto label = effective_label(set, rec);
      if (!label) continue;
      if (!std::isfinite(rec.logit) || !std::isfinite(rec.quality))
        throw InputError("fit: non-finite record " + rec.source_id + "/" +
                         rec.instance_id);
      const int j = static_cast<int>(*label);
      raw_q[j].push_back(rec.quality);
      raw_l[j].push_back(rec.logit);
    }
  }
  for (int j : {0, 1}) {
    if (raw_q[j].empty())
      throw InputError(std::string("fit: no labeled ") +
                       to_string(static_cast<Label>(j)) + " instances");
  }

  double q_min = std::numeric_limits<double>::infinity();
  double q_max = -std::numeric_limits<double>::infinity();
  for (int j : {0, 1})
    for (double q : raw_q[j]) {
      q_min = std::min(q_min, q);
      q_max = std::max(q_max, q);
    }
  if (!(q_min < q_max))
    throw InputError("fit: degenerate quality range (q_min == q_max)");

  CalibrationModel model;
  model.q_min = q_min;
  model.q_max = q_max;
  model.model_order = config.model_order;
  model.fit_meta.dev_sources = std::move(dev_sources);

  for (int j : {0, 1}) {
    std::vector<QLSample> samples(raw_q[j].size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i].q = (raw_q[j][i] - q_min) / (q_max - q_min);
      samples[i].logit = raw_l[j][i];
      lo = std::min(lo, samples[i].q);
      hi = std::max(hi, samples[i].q);
    }
    if (!(lo < hi))
      throw InputError(std::string("fit: fewer than 2 distinct quality values for class ") +
                       to_string(static_cast<Label>(j)));
    const ClassFit cf = fit_class(samples, config);
    if (static_cast<Label>(j) == Label::Real) {
      model.real = cf.coeffs;
      model.real_quad = cf.quad;
      model.fit_meta.n_dev_real = cf.n_samples;
      model.fit_meta.nll_init_real = cf.nll_init;
      model.fit_meta.nll_final_real = cf.nll_final;
      model.fit_meta.iterations_real = cf.iterations;
    } else {
      model.fake = cf.coeffs;
      model.fake_quad = cf.quad;
      model.fit_meta.n_dev_fake = cf.n_samples;
      model.fit_meta.nll_init_fake = cf.nll_init;
      model.fit_meta.nll_final_fake = cf.nll_final;
      model.fit_meta.iterations_fake = cf.iterations;
    }
  }
  return model;
}

CalibrationModel loo_fit(const Dataset& ds, std::string_view holdout_source,
                         const FitConfig& config) {
  Dataset rest;
  rest.schema_version = ds.schema_version;
  bool found = false;
  for (const auto& set : ds.sets) {
    if (set.source_id == holdout_source) {
      found = true;
      continue;
    }
    rest.sets.push_back(set);
  }
  if (!found)
    throw InputError("loo_fit: holdout source not present: " +
                     std::string(holdout_source));
  if (rest.sets.empty())
    throw InputError("loo_fit: no training sources left after holdout");
  return fit(rest, config);
}

}  // namespace quad
