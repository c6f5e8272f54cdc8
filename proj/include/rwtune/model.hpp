#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwtune/error.hpp"

namespace rwtune {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Scale on which a component's random walk operates.
enum class ScaleType { Linear, Log, Logit };

inline std::string_view to_string(ScaleType scale) {
  switch (scale) {
    case ScaleType::Linear: return "linear";
    case ScaleType::Log: return "log";
    case ScaleType::Logit: return "logit";
  }
  return "?";
}

inline bool in_support(ScaleType scale, double value) {
  switch (scale) {
    case ScaleType::Linear: return std::isfinite(value);
    case ScaleType::Log: return value > 0.0 && std::isfinite(value);
    case ScaleType::Logit: return value > 0.0 && value < 1.0;
  }
  return false;
}

/// A named vector of scalar unknowns, each carrying its own proposal scale
/// and step size.
class ParameterState {
 public:
  ParameterState(std::string name, std::vector<double> values, std::vector<ScaleType> scales,
                 std::vector<double> step_sizes)
      : name_(std::move(name)),
        values_(std::move(values)),
        scales_(std::move(scales)),
        step_sizes_(std::move(step_sizes)) {
    if (values_.empty()) throw StructureError("parameter '" + name_ + "' has no components");
    if (scales_.size() != values_.size() || step_sizes_.size() != values_.size())
      throw StructureError("parameter '" + name_ + "': values, scales and step sizes differ in length");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      check_step(i, step_sizes_[i]);
      check_value(i, values_[i]);
    }
  }

  /// All components share one scale and one initial step size.
  ParameterState(std::string name, std::vector<double> values, ScaleType scale, double step_size)
      : ParameterState(std::move(name), values, std::vector<ScaleType>(values.size(), scale),
                       std::vector<double>(values.size(), step_size)) {}

  const std::string& name() const { return name_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_.at(i); }
  void set_value(std::size_t i, double v) {
    check_value(i, v);
    values_.at(i) = v;
  }
  // Unchecked write used by the sampler for candidate evaluation; the
  // candidate may lie outside the scale's support on the linear scale.
  double& raw(std::size_t i) { return values_[i]; }

  ScaleType scale(std::size_t i) const { return scales_.at(i); }
  std::span<const ScaleType> scales() const { return scales_; }

  std::span<const double> step_sizes() const { return step_sizes_; }
  double step_size(std::size_t i) const { return step_sizes_.at(i); }
  void set_step_size(std::size_t i, double s) {
    check_step(i, s);
    step_sizes_.at(i) = s;
  }

  std::string component_name(std::size_t i) const {
    return size() == 1 ? name_ : name_ + "[" + std::to_string(i) + "]";
  }

 private:
  void check_step(std::size_t i, double s) const {
    if (!(s > 0.0) || !std::isfinite(s))
      throw StructureError("parameter '" + name_ + "' component " + std::to_string(i) +
                           ": step size must be positive");
  }
  void check_value(std::size_t i, double v) const {
    if (!in_support(scales_.at(i), v))
      throw StructureError("parameter '" + name_ + "' component " + std::to_string(i) +
                           ": value outside the support of its " +
                           std::string(to_string(scales_[i])) + " scale");
  }

  std::string name_;
  std::vector<double> values_;
  std::vector<ScaleType> scales_;
  std::vector<double> step_sizes_;
};

/// The full state of a chain: every parameter, in declaration order.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<ParameterState> params) : params_(std::move(params)) {
    for (std::size_t i = 0; i < params_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (params_[i].name() == params_[j].name())
          throw StructureError("duplicate parameter name '" + params_[i].name() + "'");
  }

  std::size_t size() const { return params_.size(); }
  std::size_t total_components() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name() == name) return i;
    throw StructureError("unknown parameter '" + std::string(name) + "'");
  }

  const ParameterState& operator[](std::size_t i) const { return params_.at(i); }
  ParameterState& operator[](std::size_t i) { return params_.at(i); }
  const ParameterState& operator[](std::string_view name) const { return params_[index_of(name)]; }
  ParameterState& operator[](std::string_view name) { return params_[index_of(name)]; }

  std::span<const double> values(std::string_view name) const { return (*this)[name].values(); }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<ParameterState> params_;
};

/// Declared shape of one parameter of a model.
struct ParameterLayout {
  std::string name;
  std::size_t length = 1;
};

/// Log posterior density over a declared parameter layout.
///
/// The evaluator must be deterministic and side-effect free. It returns -inf
/// outside the support rather than throwing.
class TargetModel {
 public:
  using Evaluator = std::function<double(const Configuration&)>;

  TargetModel(std::vector<ParameterLayout> layout, Evaluator evaluator)
      : layout_(std::move(layout)), evaluator_(std::move(evaluator)) {
    if (!evaluator_) throw StructureError("target model has no evaluator");
  }

  const std::vector<ParameterLayout>& layout() const { return layout_; }

  void check_structure(const Configuration& config) const {
    if (config.size() != layout_.size())
      throw StructureError("configuration has " + std::to_string(config.size()) +
                           " parameters, model declares " + std::to_string(layout_.size()));
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      const auto& p = config[i];
      if (p.name() != layout_[i].name || p.size() != layout_[i].length)
        throw StructureError("parameter " + std::to_string(i) + " ('" + p.name() +
                             "') does not match model declaration '" + layout_[i].name + "'");
    }
  }

  double evaluate(const Configuration& config) const {
    const double v = evaluator_(config);
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw ModelError("log density evaluated to " + std::to_string(v));
    return v;
  }

 private:
  std::vector<ParameterLayout> layout_;
  Evaluator evaluator_;
};

/// Structure-checked log density. Finite or -inf.
inline double log_density(const TargetModel& model, const Configuration& config) {
  model.check_structure(config);
  return model.evaluate(config);
}

// Log densities with normalising constants, -inf outside the support.
namespace logpdf {

inline double normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Gamma with shape/scale, so the mean is shape * scale.
inline double gamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

inline double exponential(double x, double rate = 1.0) {
  if (x < 0.0) return kNegInf;
  return std::log(rate) - rate * x;
}

inline double beta(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) -
         std::lgamma(a) - std::lgamma(b);
}

inline double student_t(double x, double dof) {
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi) - 0.5 * (dof + 1.0) * std::log1p(x * x / dof);
}

}  // namespace logpdf

/// Model with a single scalar parameter `name` and the given univariate log density.
template <typename Density>
TargetModel univariate_model(std::string name, Density density) {
  std::string key = name;
  return TargetModel({{std::move(name), 1}},
                     [key = std::move(key), density](const Configuration& c) {
                       return density(c[key].value(0));
                     });
}

}  // namespace rwtune
