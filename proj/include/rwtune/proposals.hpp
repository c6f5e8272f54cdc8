#pragma once

// Proposal kernels. Each kernel is written twice: a pure form taking the
// standard normal deviate explicitly, and a convenience form drawing it from
// a RandomSource. The pure forms make identity and shift moves exactly
// testable.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rwtune/analytic.hpp"
#include "rwtune/error.hpp"
#include "rwtune/model.hpp"
#include "rwtune/random.hpp"

namespace rwtune {

/// Candidate for one scalar component plus log(T(y,x) / T(x,y)).
struct ScalarProposal {
  double candidate = 0.0;
  double log_hastings_ratio = 0.0;
};

/// Candidate values for every affected component plus log(T(y,x) / T(x,y)).
struct ProposalOutcome {
  std::vector<double> candidate;
  double log_hastings_ratio = 0.0;
};

// --- single-component kernels -------------------------------------------

inline ScalarProposal linear_move(double x, double s, double z) { return {x + s * z, 0.0}; }

/// y = x exp(sZ). The y^-1 factor of the kernel gives a ratio of y/x.
inline ScalarProposal log_move(double x, double s, double z) {
  if (s * z == 0.0) return {x, 0.0};
  const double log_y = std::log(x) + s * z;
  return {std::exp(log_y), log_y - std::log(x)};
}

/// y = logit^-1(logit(x) + sZ), ratio y(1-y) / x(1-x).
inline ScalarProposal logit_move(double x, double s, double z) {
  if (s * z == 0.0) return {x, 0.0};
  const double eta = analytic::logit(x) + s * z;
  const double y = analytic::logit_inverse(eta);
  // log[y(1-y)] evaluated from eta to stay accurate when y is near 0 or 1.
  const double log_jac_y = analytic::log_logit_inverse(eta) + analytic::log_logit_inverse(-eta);
  const double log_jac_x = std::log(x) + std::log1p(-x);
  return {y, log_jac_y - log_jac_x};
}

inline ScalarProposal scaled_move(ScaleType scale, double x, double s, double z) {
  switch (scale) {
    case ScaleType::Linear: return linear_move(x, s, z);
    case ScaleType::Log: return log_move(x, s, z);
    case ScaleType::Logit: return logit_move(x, s, z);
  }
  return {x, 0.0};
}

inline ScalarProposal propose_linear(double x, double s, RandomSource& src) {
  return linear_move(x, s, src.normal());
}
inline ScalarProposal propose_log(double x, double s, RandomSource& src) {
  return log_move(x, s, src.normal());
}
inline ScalarProposal propose_logit(double x, double s, RandomSource& src) {
  return logit_move(x, s, src.normal());
}

// --- add-common block move ------------------------------------------------

/// Group assignment for an add-common perturbation: affected component k
/// belongs to group group_of[k]. Groups are numbered 0 .. num_groups-1 and
/// each must be non-empty.
inline std::size_t validate_groups(std::span<const std::size_t> group_of, std::size_t num_groups) {
  if (num_groups == 0) throw StructureError("perturber has no groups");
  std::vector<std::size_t> count(num_groups, 0);
  for (std::size_t g : group_of) {
    if (g >= num_groups)
      throw StructureError("group label " + std::to_string(g) + " exceeds group count");
    ++count[g];
  }
  for (std::size_t g = 0; g < num_groups; ++g)
    if (count[g] == 0) throw StructureError("perturber group " + std::to_string(g) + " is empty");
  return num_groups;
}

/// Adds s_j Z_j to every component of group j. Translation is symmetric, so
/// the log Hastings ratio is 0.
inline ProposalOutcome add_common_shift(std::span<const double> values,
                                        std::span<const std::size_t> group_of,
                                        std::span<const double> step_sizes,
                                        std::span<const double> deviates) {
  if (values.size() != group_of.size())
    throw StructureError("perturber group map does not cover the affected components");
  if (deviates.size() != step_sizes.size())
    throw StructureError("one deviate per perturber group is required");
  validate_groups(group_of, step_sizes.size());
  ProposalOutcome out;
  out.candidate.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const std::size_t g = group_of[k];
    out.candidate[k] = values[k] + step_sizes[g] * deviates[g];
  }
  return out;
}

/// Joint move: one Z_j per group, drawn in ascending group order.
inline ProposalOutcome add_common_perturb(std::span<const double> values,
                                          std::span<const std::size_t> group_of,
                                          std::span<const double> step_sizes, RandomSource& src) {
  std::vector<double> z(step_sizes.size());
  for (double& d : z) d = src.normal();
  return add_common_shift(values, group_of, step_sizes, z);
}

// --- sum-to-one logit move --------------------------------------------------

/// Moves coordinate i of a probability vector on the logit scale and rescales
/// the others proportionally so the vector stays on the simplex.
///
/// In the K-1 free coordinates the map x -> y has Jacobian
///   y_i(1-y_i) / [x_i(1-x_i)] * r^(K-2),   r = (1-y_i) / (1-x_i),
/// and the increment on logit x_i is symmetric, so this determinant is the
/// full Hastings correction.
inline ProposalOutcome sum_to_one_logit_move(std::span<const double> x, std::size_t i, double s,
                                             double z) {
  const std::size_t k = x.size();
  if (k < 2) throw StructureError("sum-to-one move needs at least two coordinates");
  if (i >= k) throw StructureError("sum-to-one move coordinate out of range");
  double total = 0.0;
  for (double v : x) {
    if (!(v > 0.0 && v < 1.0)) throw StructureError("sum-to-one entries must lie in (0,1)");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw StructureError("sum-to-one entries must sum to 1");
  if (s * z == 0.0) return {std::vector<double>(x.begin(), x.end()), 0.0};

  double rest = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    if (j != i) rest += x[j];

  const ScalarProposal head = logit_move(x[i], s, z);
  const double yi = head.candidate;
  // Dividing by the computed remainder rather than 1 - x_i keeps the sum at
  // 1 to rounding, so long chains do not drift off the simplex.
  const double r = (1.0 - yi) / rest;

  ProposalOutcome out;
  out.candidate.resize(k);
  for (std::size_t j = 0; j < k; ++j) out.candidate[j] = j == i ? yi : x[j] * r;
  out.log_hastings_ratio =
      head.log_hastings_ratio + static_cast<double>(k - 2) * (std::log1p(-yi) - std::log(rest));
  return out;
}

inline ProposalOutcome sum_to_one_logit_perturb(std::span<const double> x, std::size_t i, double s,
                                                RandomSource& src) {
  return sum_to_one_logit_move(x, i, s, src.normal());
}

}  // namespace rwtune
