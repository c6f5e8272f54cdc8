#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwtune/error.hpp"
#include "rwtune/logistic.hpp"
#include "rwtune/sampler.hpp"

namespace rwtune {

/// Layout of the trial-stage experiment. Defaults: 13 step sizes, 50
/// attempts each, one cycle, target acceptance 1/e, factor-2 spacing.
struct TrialDesign {
  int num_step_sizes = 13;
  int attempts_per_size = 50;
  int cycles = 1;
  double target_acceptance = 0.36787944117144233;  // 1/e
  double spacing_factor = 2.0;

  void validate() const {
    if (num_step_sizes < 3 || num_step_sizes % 2 == 0)
      throw StructureError("number of trial step sizes must be odd and at least 3");
    if (attempts_per_size < 1) throw StructureError("attempts per step size must be positive");
    if (cycles < 1) throw StructureError("tuning needs at least one cycle");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
      throw StructureError("target acceptance must lie in (0,1)");
    if (!(spacing_factor > 1.0)) throw StructureError("spacing factor must exceed 1");
  }

  /// Chain iterations consumed by the whole trial stage.
  std::size_t trial_iterations() const {
    return static_cast<std::size_t>(num_step_sizes) * attempts_per_size * cycles;
  }
};

/// Geometric grid guess * factor^k, k = -(m-1)/2 .. (m-1)/2.
inline std::vector<double> trial_grid(double initial_guess, const TrialDesign& design) {
  design.validate();
  if (!(initial_guess > 0.0)) throw StructureError("initial step size guess must be positive");
  const int half = (design.num_step_sizes - 1) / 2;
  std::vector<double> grid;
  grid.reserve(design.num_step_sizes);
  for (int k = -half; k <= half; ++k) grid.push_back(initial_guess * std::pow(design.spacing_factor, k));
  return grid;
}

enum class FitMethod { FixedSlope, FreeSlope };

struct CycleResult {
  AcceptanceRecord record;
  LogisticFit fit;
  double recommendation = 0.0;
  // Free-slope fit was requested but unusable; the fixed-slope fit was used.
  bool fell_back = false;
};

struct SlotTuning {
  std::string name;
  double initial_guess = 0.0;
  std::vector<CycleResult> cycles;
  double tuned_step = 0.0;
};

struct TuningReport {
  std::string update_name;
  TrialDesign design;
  SlopePrior prior;
  std::vector<SlotTuning> slots;
};

/// Fits one slot's record and returns the recommended step size.
inline CycleResult analyse_record(AcceptanceRecord record, const TrialDesign& design,
                                  const SlopePrior& prior, FitMethod method) {
  CycleResult out;
  out.record = std::move(record);
  if (method == FitMethod::FreeSlope) {
    try {
      out.fit = fit_full(out.record);
      if (out.fit.converged && out.fit.slope < 0.0) {
        out.recommendation = recommend_step(out.fit, design.target_acceptance);
        return out;
      }
    } catch (const DegenerateDesignError&) {
    }
    out.fell_back = true;
  }
  out.fit = fit_fixed_slope(out.record, kFixedSlope, prior);
  out.recommendation = recommend_step(out.fit, design.target_acceptance);
  return out;
}

/// Trial-stage state machine for one tunable update. Each call to step()
/// performs one ordinary update with every slot set to its current trial
/// size; after attempts_per_size calls the experiment moves to the next
/// size, so all slots progress through their grids together. At the end
/// of a cycle every slot is fitted independently and its recommendation
/// installed; further cycles re-centre the grid on that recommendation.
class TrialExperiment {
 public:
  TrialExperiment(TunableUpdate& update, const Configuration& config, TrialDesign design,
                  SlopePrior prior = {}, FitMethod method = FitMethod::FixedSlope,
                  bool install = true)
      : update_(update), design_(design), prior_(prior), method_(method), install_(install) {
    design_.validate();
    report_.update_name = update.name();
    report_.design = design_;
    report_.prior = prior_;
    for (std::size_t j = 0; j < update.num_slots(); ++j) {
      SlotTuning slot;
      slot.name = update.slot_name(j);
      slot.initial_guess = update.step_size(config, j);
      grids_.push_back(trial_grid(slot.initial_guess, design_));
      report_.slots.push_back(std::move(slot));
    }
    records_.resize(update.num_slots());
  }

  bool finished() const { return finished_; }
  const TuningReport& report() const { return report_; }
  const std::vector<AcceptanceRecord>& records() const { return records_; }

  void step(Configuration& config, const TargetModel& model, RandomSource& src) {
    if (finished_) throw std::logic_error("trial experiment already finished");
    const std::size_t slots = update_.num_slots();
    if (attempt_ == 0) {
      for (std::size_t j = 0; j < slots; ++j)
        update_.set_step_size(config, j, grids_[j][size_index_]);
      before_ = update_.counters();
    }
    update_.update(config, model, src);
    if (++attempt_ < design_.attempts_per_size) return;

    const auto& after = update_.counters();
    for (std::size_t j = 0; j < slots; ++j)
      records_[j].add(grids_[j][size_index_], after[j].attempts - before_[j].attempts,
                      after[j].acceptances - before_[j].acceptances);
    attempt_ = 0;
    if (++size_index_ < grids_.front().size()) return;
    finish_cycle(config);
  }

 private:
  void finish_cycle(Configuration& config) {
    size_index_ = 0;
    ++cycle_;
    if (!install_) {
      // Leave the slots at their original guesses.
      for (std::size_t j = 0; j < update_.num_slots(); ++j)
        update_.set_step_size(config, j, report_.slots[j].initial_guess);
      finished_ = true;
      return;
    }
    for (std::size_t j = 0; j < update_.num_slots(); ++j) {
      CycleResult result = analyse_record(records_[j], design_, prior_, method_);
      const double s = result.recommendation;
      update_.set_step_size(config, j, s);
      report_.slots[j].tuned_step = s;
      report_.slots[j].cycles.push_back(std::move(result));
      if (cycle_ < design_.cycles) {
        grids_[j] = trial_grid(s, design_);
        records_[j] = AcceptanceRecord{};
      }
    }
    if (cycle_ >= design_.cycles) {
      finished_ = true;
      update_.reset_counters();
    }
  }

  TunableUpdate& update_;
  TrialDesign design_;
  SlopePrior prior_;
  FitMethod method_;
  bool install_;
  TuningReport report_;
  std::vector<std::vector<double>> grids_;
  std::vector<AcceptanceRecord> records_;
  std::vector<SlotCounter> before_;
  int cycle_ = 0;
  std::size_t size_index_ = 0;
  int attempt_ = 0;
  bool finished_ = false;
};

/// Runs one trial cycle on grids centred at the update's current step sizes
/// and returns the per-slot records. Step sizes are left unchanged; the
/// chain state keeps the trial moves.
inline std::vector<AcceptanceRecord> run_trial_stage(TunableUpdate& update, Configuration& config,
                                                     const TargetModel& model, TrialDesign design,
                                                     RandomSource& src) {
  design.cycles = 1;
  TrialExperiment exp(update, config, design, {}, FitMethod::FixedSlope, /*install=*/false);
  while (!exp.finished()) exp.step(config, model, src);
  return exp.records();
}

/// Trial stage, fit and installation in one call.
inline TuningReport tune_update(TunableUpdate& update, Configuration& config,
                                const TargetModel& model, const TrialDesign& design,
                                const SlopePrior& prior, RandomSource& src,
                                FitMethod method = FitMethod::FixedSlope) {
  TrialExperiment exp(update, config, design, prior, method);
  while (!exp.finished()) exp.step(config, model, src);
  return exp.report();
}

// --- output -----------------------------------------------------------------

/// `.tun` format: one line per slot, "<slot name>\t<step size>" at 17
/// significant digits.
inline std::string format_tun(const TuningReport& report) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& slot : report.slots) out << slot.name << '\t' << slot.tuned_step << '\n';
  return out.str();
}

inline std::vector<std::pair<std::string, double>> parse_tun(const std::string& text) {
  std::vector<std::pair<std::string, double>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("malformed .tun line: " + line);
    out.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
  }
  return out;
}

inline std::filesystem::path write_tun(const std::filesystem::path& dir, const TuningReport& report) {
  std::filesystem::create_directories(dir);
  auto path = dir / (report.update_name + ".tun");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_tun(report);
  return path;
}

inline nlohmann::json to_json(const TuningReport& report) {
  using nlohmann::json;
  json slots = json::array();
  for (const auto& slot : report.slots) {
    json cycles = json::array();
    for (const auto& c : slot.cycles) {
      cycles.push_back({{"step_sizes", c.record.step_sizes},
                        {"attempts", c.record.attempts},
                        {"acceptances", c.record.acceptances},
                        {"intercept", c.fit.intercept},
                        {"slope", c.fit.slope},
                        {"fixed_slope", c.fit.fixed_slope},
                        {"iterations", c.fit.iterations},
                        {"converged", c.fit.converged},
                        {"fell_back", c.fell_back},
                        {"recommendation", c.recommendation}});
    }
    slots.push_back({{"slot", slot.name},
                     {"initial_guess", slot.initial_guess},
                     {"tuned_step", slot.tuned_step},
                     {"cycles", cycles}});
  }
  return {{"update", report.update_name},
          {"design",
           {{"num_step_sizes", report.design.num_step_sizes},
            {"attempts_per_size", report.design.attempts_per_size},
            {"cycles", report.design.cycles},
            {"target_acceptance", report.design.target_acceptance},
            {"spacing_factor", report.design.spacing_factor}}},
          {"prior", {{"mean", report.prior.mean}, {"sd", report.prior.sd}}},
          {"slots", slots}};
}

// --- the tuner as an update ---------------------------------------------------

/// Supervises a tunable update: its first design.trial_iterations() calls run
/// the trial experiment, after which the tuned step sizes are installed (and
/// optionally written to <dir>/<name>.tun) and calls pass straight through.
class UpdateTuner : public Update {
 public:
  explicit UpdateTuner(std::unique_ptr<TunableUpdate> inner, TrialDesign design = {},
                       SlopePrior prior = {}, std::optional<std::vector<double>> initial_guesses = {},
                       FitMethod method = FitMethod::FixedSlope)
      : inner_(std::move(inner)),
        design_(design),
        prior_(prior),
        guesses_(std::move(initial_guesses)),
        method_(method) {
    design_.validate();
    if (guesses_ && guesses_->size() != inner_->num_slots())
      throw StructureError("one initial guess per step size is required");
  }

  const std::string& name() const override { return inner_->name(); }

  void set_output_dir(std::filesystem::path dir) { output_dir_ = std::move(dir); }

  void update(Configuration& config, const TargetModel& model, RandomSource& src) override {
    if (done_) {
      inner_->update(config, model, src);
      return;
    }
    if (!experiment_) {
      if (guesses_) inner_->set_step_sizes(config, *guesses_);
      experiment_.emplace(*inner_, config, design_, prior_, method_);
    }
    experiment_->step(config, model, src);
    if (experiment_->finished()) {
      report_ = experiment_->report();
      experiment_.reset();
      done_ = true;
      if (output_dir_) write_tun(*output_dir_, *report_);
    }
  }

  bool tuned() const { return done_; }
  const std::optional<TuningReport>& report() const { return report_; }
  TunableUpdate& inner() { return *inner_; }
  const TunableUpdate& inner() const { return *inner_; }
  const TrialDesign& design() const { return design_; }

 private:
  std::unique_ptr<TunableUpdate> inner_;
  TrialDesign design_;
  SlopePrior prior_;
  std::optional<std::vector<double>> guesses_;
  FitMethod method_;
  std::optional<TrialExperiment> experiment_;
  std::optional<TuningReport> report_;
  std::optional<std::filesystem::path> output_dir_;
  bool done_ = false;
};

}  // namespace rwtune
