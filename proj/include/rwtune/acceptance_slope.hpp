#pragma once

// Empirical logit-acceptance slope for non-normal targets: run a linear
// random walk at each step size in a grid, count acceptances, and fit the
// free-slope logistic regression to the counts.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rwtune/logistic.hpp"
#include "rwtune/model.hpp"
#include "rwtune/sampler.hpp"

namespace rwtune::analytic {

enum class TargetFamily { Normal, Exponential, StudentT2 };

inline std::string_view to_string(TargetFamily f) {
  switch (f) {
    case TargetFamily::Normal: return "normal";
    case TargetFamily::Exponential: return "exponential";
    case TargetFamily::StudentT2: return "t2";
  }
  return "?";
}

inline TargetModel family_model(TargetFamily f) {
  switch (f) {
    case TargetFamily::Normal:
      return univariate_model("x", [](double x) { return logpdf::normal(x, 0.0, 1.0); });
    case TargetFamily::Exponential:
      return univariate_model("x", [](double x) { return logpdf::exponential(x, 1.0); });
    case TargetFamily::StudentT2:
      return univariate_model("x", [](double x) { return logpdf::student_t(x, 2.0); });
  }
  throw StructureError("unknown target family");
}

/// s = e^k for k = -4, -3.5, ..., 6.
inline std::vector<double> empirical_slope_grid() {
  std::vector<double> grid;
  for (int i = -8; i <= 12; ++i) grid.push_back(std::exp(0.5 * i));
  return grid;
}

struct SlopeEstimate {
  AcceptanceRecord record;
  LogisticFit fit;
};

/// Acceptance counts for `attempts` moves at each grid size, each after
/// `burn_in` discarded moves, from a chain started at the target's median.
inline AcceptanceRecord acceptance_counts(TargetFamily family, const std::vector<double>& s_grid,
                                          long attempts, std::uint64_t seed, long burn_in = 1000) {
  const TargetModel model = family_model(family);
  const double start = family == TargetFamily::Exponential ? std::log(2.0) : 0.0;
  AcceptanceRecord rec;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    Configuration config({ParameterState("x", {start}, ScaleType::Linear, s_grid[i])});
    SingleSiteUpdate update(config, "x");
    RandomSource src = RandomSource::derived(seed, std::string(to_string(family)) + "/" + std::to_string(i));
    for (long b = 0; b < burn_in; ++b) update.update(config, model, src);
    update.reset_counters();
    for (long t = 0; t < attempts; ++t) update.update(config, model, src);
    rec.add(s_grid[i], update.counters()[0].attempts, update.counters()[0].acceptances);
  }
  return rec;
}

/// Throws DegenerateDesignError when the counts are separated and the
/// free fit does not converge.
inline SlopeEstimate empirical_slope(TargetFamily family, const std::vector<double>& s_grid,
                                     long attempts, std::uint64_t seed) {
  SlopeEstimate est;
  est.record = acceptance_counts(family, s_grid, attempts, seed);
  est.fit = fit_full(est.record);
  if (!est.fit.converged) throw DegenerateDesignError("acceptance counts are separated");
  return est;
}

}  // namespace rwtune::analytic
