#pragma once

// Logistic regression of acceptance rate on log step size:
//   logit P(accept | s) = a + b log s
// fitted either with both coefficients free (Newton-Raphson) or with the
// slope fixed and a normal prior on the intercept.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "rwtune/analytic.hpp"
#include "rwtune/error.hpp"

namespace rwtune {

/// Slope of logit acceptance against log step size for a normal target.
inline constexpr double kFixedSlope = -1.12145;

/// Normal prior on the intercept; keeps the fixed-slope fit finite for
/// all-accept and all-reject data.
struct SlopePrior {
  double mean = -3.0;
  double sd = 5.0;
};

/// Outcome of a trial experiment for one tunable slot: at step size s_i,
/// x_i of n_i attempts were accepted.
struct AcceptanceRecord {
  std::vector<double> step_sizes;
  std::vector<long> attempts;
  std::vector<long> acceptances;

  std::size_t size() const { return step_sizes.size(); }
  bool empty() const { return step_sizes.empty(); }

  void add(double s, long n, long x) {
    step_sizes.push_back(s);
    attempts.push_back(n);
    acceptances.push_back(x);
  }

  void validate() const {
    if (attempts.size() != step_sizes.size() || acceptances.size() != step_sizes.size())
      throw StructureError("acceptance record columns differ in length");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!(step_sizes[i] > 0.0)) throw StructureError("acceptance record step sizes must be positive");
      if (attempts[i] < 0 || acceptances[i] < 0 || acceptances[i] > attempts[i])
        throw StructureError("acceptance record needs 0 <= x_i <= n_i");
    }
  }
};

struct LogisticFit {
  double intercept = 0.0;
  double slope = kFixedSlope;
  bool fixed_slope = true;
  int iterations = 0;
  bool converged = false;
};

struct FitOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
  int max_halvings = 30;
};

namespace detail {

inline constexpr double kProbClamp = 1e-12;

inline double clamped_prob(double eta) {
  return std::clamp(analytic::logit_inverse(eta), kProbClamp, 1.0 - kProbClamp);
}

}  // namespace detail

/// Binomial log-likelihood (up to the constant binomial coefficients).
inline double log_likelihood(const AcceptanceRecord& rec, double a, double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double eta = a + b * std::log(rec.step_sizes[i]);
    const auto x = static_cast<double>(rec.acceptances[i]);
    const auto n = static_cast<double>(rec.attempts[i]);
    if (x > 0) ll += x * analytic::log_logit_inverse(eta);
    if (n - x > 0) ll += (n - x) * analytic::log_logit_inverse(-eta);
  }
  return ll;
}

inline double penalized_log_likelihood(const AcceptanceRecord& rec, double a, double b,
                                       const SlopePrior& prior) {
  const double z = (a - prior.mean) / prior.sd;
  return log_likelihood(rec, a, b) - 0.5 * z * z;
}

/// Gradient of the log-likelihood in (a, b).
inline std::pair<double, double> score(const AcceptanceRecord& rec, double a, double b) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double ls = std::log(rec.step_sizes[i]);
    const double r = static_cast<double>(rec.acceptances[i]) -
                     static_cast<double>(rec.attempts[i]) * analytic::logit_inverse(a + b * ls);
    sa += r;
    sb += ls * r;
  }
  return {sa, sb};
}

/// Derivative in a of the penalized log-likelihood with b held fixed.
inline double penalized_score(const AcceptanceRecord& rec, double a, double b,
                              const SlopePrior& prior) {
  return score(rec, a, b).first - (a - prior.mean) / (prior.sd * prior.sd);
}

/// Maximum-likelihood (a, b) by Newton-Raphson from a = b = 0.
///
/// Throws DegenerateDesignError when the data cannot identify both
/// coefficients: fewer than two distinct step sizes, no acceptances, no
/// rejections, or a singular information matrix. Non-convergence is
/// reported through `converged`, not thrown.
inline LogisticFit fit_full(const AcceptanceRecord& rec, const FitOptions& opt = {}) {
  rec.validate();
  long total_n = 0, total_x = 0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    total_n += rec.attempts[i];
    total_x += rec.acceptances[i];
  }
  const bool distinct = std::any_of(rec.step_sizes.begin(), rec.step_sizes.end(),
                                    [&](double s) { return s != rec.step_sizes.front(); });
  if (rec.empty() || !distinct)
    throw DegenerateDesignError("free-slope fit needs at least two distinct step sizes");
  if (total_x == 0 || total_x == total_n)
    throw DegenerateDesignError("free-slope fit needs both acceptances and rejections");

  LogisticFit fit{0.0, 0.0, false, 0, false};
  for (int k = 1; k <= opt.max_iterations; ++k) {
    double A = 0.0, B = 0.0, C = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const double ls = std::log(rec.step_sizes[i]);
      const double p = detail::clamped_prob(fit.intercept + fit.slope * ls);
      const auto n = static_cast<double>(rec.attempts[i]);
      const double w = n * p * (1.0 - p);
      A += w;
      B += w * ls;
      C += w * ls * ls;
      const double r = static_cast<double>(rec.acceptances[i]) - n * p;
      sa += r;
      sb += ls * r;
    }
    const double det = A * C - B * B;
    if (!(det > 1e-12 * A * C)) throw DegenerateDesignError("singular information matrix");
    const double da = (C * sa - B * sb) / det;
    const double db = (A * sb - B * sa) / det;
    fit.intercept += da;
    fit.slope += db;
    fit.iterations = k;
    if (!std::isfinite(fit.intercept) || !std::isfinite(fit.slope)) break;
    if (std::abs(da) < opt.tolerance && std::abs(db) < opt.tolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

/// Posterior mode of the intercept with the slope fixed, starting from the
/// prior mean. Newton steps are halved while they lower the penalized
/// likelihood. The prior guarantees a finite maximizer for any record.
inline LogisticFit fit_fixed_slope(const AcceptanceRecord& rec, double slope = kFixedSlope,
                                   const SlopePrior& prior = {}, const FitOptions& opt = {}) {
  rec.validate();
  if (rec.empty()) throw StructureError("fixed-slope fit needs a non-empty record");
  if (!(prior.sd > 0.0)) throw StructureError("intercept prior sd must be positive");

  const double prior_precision = 1.0 / (prior.sd * prior.sd);
  LogisticFit fit{prior.mean, slope, true, 0, false};
  double a = prior.mean;
  double current = penalized_log_likelihood(rec, a, slope, prior);
  for (int k = 1; k <= opt.max_iterations; ++k) {
    double grad = -(a - prior.mean) * prior_precision;
    double info = prior_precision;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const double p = detail::clamped_prob(a + slope * std::log(rec.step_sizes[i]));
      const auto n = static_cast<double>(rec.attempts[i]);
      grad += static_cast<double>(rec.acceptances[i]) - n * p;
      info += n * p * (1.0 - p);
    }
    double step = grad / info;
    fit.iterations = k;
    if (std::abs(step) < opt.tolerance) {
      a += step;
      fit.converged = true;
      break;
    }
    // Near the optimum the objective differences are rounding noise; only guard large steps.
    if (std::abs(step) > 1e-6) {
      double next = penalized_log_likelihood(rec, a + step, slope, prior);
      for (int h = 0; h < opt.max_halvings && next < current; ++h) {
        step *= 0.5;
        next = penalized_log_likelihood(rec, a + step, slope, prior);
      }
      current = next;
    } else {
      current = penalized_log_likelihood(rec, a + step, slope, prior);
    }
    a += step;
  }
  fit.intercept = a;
  return fit;
}

/// Step size at which the fitted curve reaches `target`: exp((logit(target) - a) / b).
inline double recommend_step(const LogisticFit& fit, double target) {
  if (!(fit.slope < 0.0))
    throw InvalidFitError("fitted slope must be negative to invert, got " + std::to_string(fit.slope));
  if (!(target > 0.0 && target < 1.0))
    throw InvalidFitError("target acceptance must lie in (0,1)");
  return std::exp((analytic::logit(target) - fit.intercept) / fit.slope);
}

/// Fitted acceptance probability at step size s.
inline double fitted_acceptance(const LogisticFit& fit, double s) {
  return analytic::logit_inverse(fit.intercept + fit.slope * std::log(s));
}

}  // namespace rwtune
