#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwtune/error.hpp"
#include "rwtune/model.hpp"
#include "rwtune/proposals.hpp"
#include "rwtune/random.hpp"

namespace rwtune {

/// Metropolis-Hastings acceptance test. Accepts with probability
/// min{1, exp(log_f_candidate - log_f_current + log_hastings_ratio)}.
/// A uniform is consumed only when the ratio is strictly below one.
inline bool accept_reject(double log_f_current, double log_f_candidate, double log_hastings_ratio,
                          RandomSource& src) {
  if (log_f_current == kNegInf)
    throw InvalidStateError("current state has zero posterior density");
  if (log_f_candidate == kNegInf) return false;
  const double log_ratio = log_f_candidate - log_f_current + log_hastings_ratio;
  if (log_ratio >= 0.0) return true;
  return std::log(src.uniform()) < log_ratio;
}

struct SlotCounter {
  long attempts = 0;
  long acceptances = 0;
};

/// One element of the per-iteration update cycle.
class Update {
 public:
  virtual ~Update() = default;
  virtual const std::string& name() const = 0;
  virtual void update(Configuration& config, const TargetModel& model, RandomSource& src) = 0;
};

/// An update whose proposals depend on a vector of step sizes ("slots"),
/// each with its own attempt/acceptance counter.
class TunableUpdate : public Update {
 public:
  virtual std::size_t num_slots() const = 0;
  virtual std::string slot_name(std::size_t slot) const = 0;
  virtual double step_size(const Configuration& config, std::size_t slot) const = 0;
  virtual void set_step_size(Configuration& config, std::size_t slot, double s) = 0;

  std::vector<double> step_sizes(const Configuration& config) const {
    std::vector<double> out(num_slots());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = step_size(config, i);
    return out;
  }
  void set_step_sizes(Configuration& config, std::span<const double> sizes) {
    if (sizes.size() != num_slots()) throw StructureError("step size vector has wrong length");
    for (std::size_t i = 0; i < sizes.size(); ++i) set_step_size(config, i, sizes[i]);
  }

  const std::vector<SlotCounter>& counters() const { return counters_; }
  void reset_counters() { counters_.assign(counters_.size(), SlotCounter{}); }

  std::vector<long> acceptances() const {
    std::vector<long> out;
    for (const auto& c : counters_) out.push_back(c.acceptances);
    return out;
  }
  std::vector<long> attempts() const {
    std::vector<long> out;
    for (const auto& c : counters_) out.push_back(c.attempts);
    return out;
  }

 protected:
  void init_counters(std::size_t n) { counters_.assign(n, SlotCounter{}); }
  void count(std::size_t slot, bool accepted) {
    ++counters_[slot].attempts;
    if (accepted) ++counters_[slot].acceptances;
  }

 private:
  std::vector<SlotCounter> counters_;
};

namespace detail {

// Writes candidate values into the configuration, evaluates, and either keeps
// them or restores the previous values.
template <typename Write, typename Restore>
bool try_move(Configuration& config, const TargetModel& model, double& current, double log_hastings,
              RandomSource& src, Write write, Restore restore) {
  write();
  double candidate;
  try {
    candidate = model.evaluate(config);
  } catch (...) {
    restore();
    throw;
  }
  if (accept_reject(current, candidate, log_hastings, src)) {
    current = candidate;
    return true;
  }
  restore();
  return false;
}

}  // namespace detail

/// Variable-at-a-time sweep over one parameter: each component, in ascending
/// index order, gets one random-walk attempt on its own scale.
class SingleSiteUpdate : public TunableUpdate {
 public:
  SingleSiteUpdate(const Configuration& config, std::string parameter)
      : parameter_(std::move(parameter)) {
    const auto& p = config[parameter_];
    for (std::size_t k = 0; k < p.size(); ++k) slot_names_.push_back(p.component_name(k));
    init_counters(p.size());
  }

  const std::string& name() const override { return parameter_; }
  std::size_t num_slots() const override { return slot_names_.size(); }
  std::string slot_name(std::size_t slot) const override { return slot_names_.at(slot); }
  double step_size(const Configuration& config, std::size_t slot) const override {
    return config[parameter_].step_size(slot);
  }
  void set_step_size(Configuration& config, std::size_t slot, double s) override {
    config[parameter_].set_step_size(slot, s);
  }

  void update(Configuration& config, const TargetModel& model, RandomSource& src) override {
    double current = log_density(model, config);
    auto& p = config[parameter_];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double old = p.value(k);
      const ScalarProposal prop = scaled_move(p.scale(k), old, p.step_size(k), src.normal());
      // Logit candidates can round onto 0 or 1 for huge steps; those have zero density.
      if (!in_support(p.scale(k), prop.candidate)) {
        count(k, false);
        continue;
      }
      const bool accepted = detail::try_move(
          config, model, current, prop.log_hastings_ratio, src,
          [&] { p.raw(k) = prop.candidate; }, [&] { p.raw(k) = old; });
      count(k, accepted);
    }
  }

 private:
  std::string parameter_;
  std::vector<std::string> slot_names_;
};

/// One scalar component touched by a block move.
struct ComponentRef {
  std::string parameter;
  std::size_t component = 0;
};

/// Multiple-parameter update driven by an add-common perturber: the affected
/// components are divided into groups, and group j is shifted by s_j Z_j.
/// Each group is attempted as its own Metropolis move, in ascending group
/// order, so every group step size has its own acceptance counter.
class AddCommonUpdate : public TunableUpdate {
 public:
  AddCommonUpdate(std::string name, std::vector<ComponentRef> components,
                  std::vector<std::size_t> group_of, std::vector<double> step_sizes)
      : name_(std::move(name)),
        components_(std::move(components)),
        group_of_(std::move(group_of)),
        step_sizes_(std::move(step_sizes)) {
    if (components_.empty()) throw StructureError("block update '" + name_ + "' moves nothing");
    if (group_of_.size() != components_.size())
      throw StructureError("block update '" + name_ + "': group map does not cover every component");
    validate_groups(group_of_, step_sizes_.size());
    for (double s : step_sizes_)
      if (!(s > 0.0)) throw StructureError("block update '" + name_ + "': step sizes must be positive");
    init_counters(step_sizes_.size());
  }

  /// Every component in one group with a single shared step size.
  AddCommonUpdate(std::string name, std::vector<ComponentRef> components, double step_size)
      : AddCommonUpdate(std::move(name), components, std::vector<std::size_t>(components.size(), 0),
                        {step_size}) {}

  const std::string& name() const override { return name_; }
  std::size_t num_slots() const override { return step_sizes_.size(); }
  std::string slot_name(std::size_t slot) const override {
    return num_slots() == 1 ? name_ : name_ + "[" + std::to_string(slot) + "]";
  }
  double step_size(const Configuration&, std::size_t slot) const override {
    return step_sizes_.at(slot);
  }
  void set_step_size(Configuration&, std::size_t slot, double s) override {
    if (!(s > 0.0)) throw StructureError("step sizes must be positive");
    step_sizes_.at(slot) = s;
  }

  void update(Configuration& config, const TargetModel& model, RandomSource& src) override {
    double current = log_density(model, config);
    std::vector<double*> slots;
    std::vector<double> old;
    for (const auto& ref : components_) {
      auto& p = config[ref.parameter];
      if (ref.component >= p.size() || p.scale(ref.component) != ScaleType::Linear)
        throw StructureError("block update '" + name_ + "' needs linear-scale components");
      slots.push_back(&p.raw(ref.component));
      old.push_back(*slots.back());
    }
    std::vector<double> z(step_sizes_.size(), 0.0);
    for (std::size_t g = 0; g < step_sizes_.size(); ++g) {
      std::fill(z.begin(), z.end(), 0.0);
      z[g] = src.normal();
      const ProposalOutcome prop = add_common_shift(old, group_of_, step_sizes_, z);
      const bool accepted = detail::try_move(
          config, model, current, prop.log_hastings_ratio, src,
          [&] {
            for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = prop.candidate[k];
          },
          [&] {
            for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = old[k];
          });
      if (accepted) old = prop.candidate;
      count(g, accepted);
    }
  }

 private:
  std::string name_;
  std::vector<ComponentRef> components_;
  std::vector<std::size_t> group_of_;
  std::vector<double> step_sizes_;
};

/// Sweep over a probability vector with one sum-to-one logit move per
/// coordinate. The parameter's components must be logit-scaled and sum to 1.
class SumToOneUpdate : public TunableUpdate {
 public:
  SumToOneUpdate(const Configuration& config, std::string parameter)
      : parameter_(std::move(parameter)) {
    const auto& p = config[parameter_];
    if (p.size() < 2) throw StructureError("sum-to-one parameter needs at least two components");
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p.scale(k) != ScaleType::Logit)
        throw StructureError("sum-to-one parameter components must be logit-scaled");
      slot_names_.push_back(p.component_name(k));
    }
    init_counters(p.size());
  }

  const std::string& name() const override { return parameter_; }
  std::size_t num_slots() const override { return slot_names_.size(); }
  std::string slot_name(std::size_t slot) const override { return slot_names_.at(slot); }
  double step_size(const Configuration& config, std::size_t slot) const override {
    return config[parameter_].step_size(slot);
  }
  void set_step_size(Configuration& config, std::size_t slot, double s) override {
    config[parameter_].set_step_size(slot, s);
  }

  void update(Configuration& config, const TargetModel& model, RandomSource& src) override {
    double current = log_density(model, config);
    auto& p = config[parameter_];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::vector<double> old(p.values().begin(), p.values().end());
      const ProposalOutcome prop = sum_to_one_logit_perturb(old, i, p.step_size(i), src);
      bool inside = true;
      for (double v : prop.candidate) inside = inside && v > 0.0 && v < 1.0;
      if (!inside) {
        count(i, false);
        continue;
      }
      const bool accepted = detail::try_move(
          config, model, current, prop.log_hastings_ratio, src,
          [&] {
            for (std::size_t j = 0; j < old.size(); ++j) p.raw(j) = prop.candidate[j];
          },
          [&] {
            for (std::size_t j = 0; j < old.size(); ++j) p.raw(j) = old[j];
          });
      count(i, accepted);
    }
  }

 private:
  std::string parameter_;
  std::vector<std::string> slot_names_;
};

/// Per-iteration snapshots of every parameter value.
class ChainTrace {
 public:
  ChainTrace() = default;
  explicit ChainTrace(const Configuration& layout) {
    for (const auto& p : layout) {
      Block b{p.name(), {}, offset_};
      for (std::size_t k = 0; k < p.size(); ++k) b.columns.push_back(p.component_name(k));
      offset_ += p.size();
      blocks_.push_back(std::move(b));
    }
  }

  void record(const Configuration& config) {
    std::vector<double> row;
    row.reserve(offset_);
    for (const auto& p : config) row.insert(row.end(), p.values().begin(), p.values().end());
    if (row.size() != offset_) throw StructureError("trace layout does not match configuration");
    rows_.push_back(std::move(row));
  }

  std::size_t iterations() const { return rows_.size(); }
  std::size_t width() const { return offset_; }
  const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }

  /// Column for component `component` of parameter `parameter`.
  std::vector<double> column(std::string_view parameter, std::size_t component = 0) const {
    const Block& b = block(parameter);
    if (component >= b.columns.size()) throw StructureError("trace component out of range");
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[b.offset + component]);
    return out;
  }

  /// One CSV per parameter, named <prefix><parameter>.csv.
  std::vector<std::filesystem::path> write_csv(const std::filesystem::path& dir,
                                               const std::string& prefix = "") const {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& b : blocks_) {
      auto path = dir / (prefix + b.name + ".csv");
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      for (std::size_t k = 0; k < b.columns.size(); ++k) out << (k ? "," : "") << b.columns[k];
      out << '\n' << std::setprecision(17);
      for (const auto& r : rows_) {
        for (std::size_t k = 0; k < b.columns.size(); ++k) out << (k ? "," : "") << r[b.offset + k];
        out << '\n';
      }
      written.push_back(path);
    }
    return written;
  }

 private:
  struct Block {
    std::string name;
    std::vector<std::string> columns;
    std::size_t offset = 0;
  };
  const Block& block(std::string_view name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw StructureError("trace has no parameter '" + std::string(name) + "'");
  }

  std::vector<Block> blocks_;
  std::size_t offset_ = 0;
  std::vector<std::vector<double>> rows_;
};

/// A Markov chain: a target, its current state, and an ordered collection of
/// updates. One pass through the collection is one iteration. Each update
/// draws from its own substream derived from (seed, update name).
class Chain {
 public:
  Chain(TargetModel model, Configuration initial, std::uint64_t seed)
      : model_(std::move(model)), state_(std::move(initial)), seed_(seed) {
    if (log_density(model_, state_) == kNegInf)
      throw InvalidStateError("initial configuration has zero posterior density");
  }

  Chain& add(std::unique_ptr<Update> update) {
    for (const auto& u : updates_)
      if (u->name() == update->name())
        throw StructureError("duplicate update name '" + update->name() + "'");
    streams_.push_back(RandomSource::derived(seed_, update->name()));
    updates_.push_back(std::move(update));
    return *this;
  }

  template <typename U, typename... Args>
  U& emplace(Args&&... args) {
    auto u = std::make_unique<U>(std::forward<Args>(args)...);
    U& ref = *u;
    add(std::move(u));
    return ref;
  }

  void iterate() {
    for (std::size_t i = 0; i < updates_.size(); ++i)
      updates_[i]->update(state_, model_, streams_[i]);
  }

  /// Runs `iterations` full cycles, appending one trace row per cycle.
  void run(std::size_t iterations, ChainTrace* trace = nullptr) {
    for (std::size_t it = 0; it < iterations; ++it) {
      iterate();
      if (trace) trace->record(state_);
    }
  }

  const TargetModel& model() const { return model_; }
  const Configuration& state() const { return state_; }
  Configuration& state() { return state_; }
  std::size_t num_updates() const { return updates_.size(); }
  Update& update(std::size_t i) { return *updates_.at(i); }
  std::uint64_t seed() const { return seed_; }

 private:
  TargetModel model_;
  Configuration state_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Update>> updates_;
  std::vector<RandomSource> streams_;
};

inline ChainTrace run_chain(Chain& chain, std::size_t iterations) {
  ChainTrace trace(chain.state());
  chain.run(iterations, &trace);
  return trace;
}

}  // namespace rwtune
