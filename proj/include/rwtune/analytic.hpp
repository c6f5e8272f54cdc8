#pragma once

// Reference acceptance-rate quantities for a Gaussian random walk on a
// normal target, and the logit helpers used throughout the tuner.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwtune/error.hpp"

namespace rwtune::analytic {

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double logit_inverse(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(logit_inverse(z)) without cancellation for large |z|.
inline double log_logit_inverse(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Long-run acceptance rate of a N(x, s^2) random walk on a N(0, sigma^2)
/// target: (2/pi) atan(2 sigma / s).
inline double arctan_acceptance(double s, double sigma = 1.0) {
  return 2.0 / std::numbers::pi * std::atan(2.0 * sigma / s);
}

/// The same rate as a one-dimensional integral over the whitened (x, y)
/// plane, evaluated by adaptive Gauss-Kronrod quadrature.
inline double integral_acceptance(double s) {
  const double upper = 1.0 / (1.0 + s);
  const double lower = (2.0 + s) / (2.0 + s + s * s);
  auto integrand = [&](double x) {
    return (normal_cdf(x * upper) - normal_cdf(-x * lower)) * normal_pdf(x);
  };
  // phi(12) ~ 1e-32, so the truncated tail is far below tolerance.
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, 12.0, 15, 1e-14, &error);
  return 4.0 * value;
}

/// Step size whose arctan-law acceptance rate is exactly p.
inline double closed_form_step(double sigma, double p) {
  return 2.0 * sigma / std::tan(0.5 * std::numbers::pi * p);
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Least-squares line through (log s, logit p(s)) for p = arctan_acceptance(., sigma).
inline LineFit logit_linearization(std::span<const double> s_grid, double sigma = 1.0) {
  if (s_grid.size() < 2) throw StructureError("linearization needs at least two step sizes");
  const auto n = static_cast<double>(s_grid.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> xs, ys;
  for (double s : s_grid) {
    if (!(s > 0.0)) throw StructureError("linearization step sizes must be positive");
    xs.push_back(std::log(s));
    ys.push_back(logit(arctan_acceptance(s, sigma)));
    mx += xs.back();
    my += ys.back();
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw StructureError("linearization grid has a single distinct step size");
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

/// s = e^k for k = -2, -1.5, ..., 4: the grid the validation suite fits on.
inline std::vector<double> linearization_grid() {
  std::vector<double> grid;
  for (int i = -4; i <= 8; ++i) grid.push_back(std::exp(0.5 * i));
  return grid;
}

}  // namespace rwtune::analytic
