#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.
// Nothing here calls into the code under test except to build inputs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace rwtune::testing {

inline double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means (sqrt(n) batches of sqrt(n) draws).
inline double batch_means_se(const std::vector<double>& xs) {
  const auto n = xs.size();
  const auto len = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t batches = n / len;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(sample_variance(means) / static_cast<double>(batches));
}

/// Mean and second central moment of a chain, each with a batch-means
/// standard error.
struct MomentCheck {
  double mean = 0.0, mean_se = 0.0;
  double var = 0.0, var_se = 0.0;
};

inline MomentCheck moments(const std::vector<double>& xs, double true_mean) {
  MomentCheck c;
  c.mean = sample_mean(xs);
  c.mean_se = batch_means_se(xs);
  std::vector<double> sq;
  sq.reserve(xs.size());
  for (double x : xs) sq.push_back((x - true_mean) * (x - true_mean));
  c.var = sample_mean(sq);
  c.var_se = batch_means_se(sq);
  return c;
}

/// True when both moments sit within z standard errors (plus a small
/// absolute floor) of the target values.
inline bool moments_match(const MomentCheck& c, double mean, double var, double z = 4.0) {
  return std::abs(c.mean - mean) <= z * c.mean_se + 1e-3 &&
         std::abs(c.var - var) <= z * c.var_se + 1e-3;
}

// Kernel densities T(x -> y) written directly from their definitions.

inline double normal_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double linear_kernel(double x, double y, double s) { return normal_density(y, x, s); }

inline double log_kernel(double x, double y, double s) {
  return normal_density(std::log(y), std::log(x), s) / y;
}

inline double logit_kernel(double x, double y, double s) {
  auto lg = [](double p) { return std::log(p / (1.0 - p)); };
  return normal_density(lg(y), lg(x), s) / (y * (1.0 - y));
}

/// Maximizes a concave function of two variables by repeated grid search
/// on a shrinking box. No derivatives.
inline std::pair<double, double> grid_search_max(const std::function<double(double, double)>& f,
                                                 double a0, double b0, double half_width,
                                                 int rounds = 40) {
  double ca = a0, cb = b0, w = half_width;
  constexpr int kPts = 21;
  for (int r = 0; r < rounds; ++r) {
    double best = -std::numeric_limits<double>::infinity();
    double ba = ca, bb = cb;
    for (int i = 0; i < kPts; ++i)
      for (int j = 0; j < kPts; ++j) {
        const double a = ca - w + 2.0 * w * i / (kPts - 1);
        const double b = cb - w + 2.0 * w * j / (kPts - 1);
        const double v = f(a, b);
        if (v > best) {
          best = v;
          ba = a;
          bb = b;
        }
      }
    ca = ba;
    cb = bb;
    w *= 0.5;
  }
  return {ca, cb};
}

/// Binomial log-likelihood of logit p = a + b log s written out directly.
inline double binomial_loglik(const std::vector<double>& s, const std::vector<long>& n,
                              const std::vector<long>& x, double a, double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(a + b * std::log(s[i]))));
    ll += static_cast<double>(x[i]) * std::log(p) + static_cast<double>(n[i] - x[i]) * std::log1p(-p);
  }
  return ll;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rwtune_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rwtune::testing
