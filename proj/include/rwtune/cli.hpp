#pragma once

// Subcommand implementations. Exit codes: 0 success, 1 failed check,
// 2 unreadable or invalid configuration, 3 model error. Diagnostics go to
// the error stream; results go to files under the output directory.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwtune/analytic.hpp"
#include "rwtune/config.hpp"
#include "rwtune/experiments.hpp"
#include "rwtune/logistic.hpp"
#include "rwtune/sampler.hpp"
#include "rwtune/tuner.hpp"

namespace rwtune::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kModelError = 3 };

struct ValidateOptions {
  // The slope constant the linearization check compares against. Only
  // changed by tests, as a negative control.
  double slope_constant = kFixedSlope;
  long attempts = 100000;
  std::uint64_t seed = kDefaultSeed;
};

struct ValidateRow {
  double step = 0.0;
  double analytic = 0.0;
  double empirical = 0.0;
};

/// Empirical acceptance of a linear random walk on N(0,1) after a short burn-in.
inline double empirical_normal_acceptance(double s, long attempts, std::uint64_t seed) {
  const TargetModel model =
      univariate_model("x", [](double x) { return logpdf::normal(x, 0.0, 1.0); });
  Configuration config({ParameterState("x", {0.0}, ScaleType::Linear, s)});
  SingleSiteUpdate update(config, "x");
  RandomSource src = RandomSource::derived(seed, "validate/" + std::to_string(s));
  for (int i = 0; i < 1000; ++i) update.update(config, model, src);
  update.reset_counters();
  for (long i = 0; i < attempts; ++i) update.update(config, model, src);
  return static_cast<double>(update.counters()[0].acceptances) / static_cast<double>(attempts);
}

inline int cmd_validate(const ValidateOptions& opt, std::ostream& out, std::ostream& err) {
  bool ok = true;
  auto fail = [&](const std::string& check, const std::string& why) {
    err << "validate: check '" << check << "' failed: " << why << '\n';
    ok = false;
  };

  // arctan law vs quadrature
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double s = std::pow(10.0, -2.0 + 4.0 * i / 49.0);
    worst = std::max(worst, std::abs(analytic::integral_acceptance(s) - analytic::arctan_acceptance(s)));
  }
  if (!(worst < 1e-8)) fail("arctan-integral", "max deviation " + std::to_string(worst));

  // closed form is the exact inverse of the arctan law
  double worst_inv = 0.0;
  for (double p = 0.05; p < 0.96; p += 0.05)
    worst_inv = std::max(worst_inv,
                         std::abs(analytic::arctan_acceptance(analytic::closed_form_step(1.0, p)) - p));
  if (!(worst_inv < 1e-12)) fail("inverse", "max deviation " + std::to_string(worst_inv));

  // logit-linear approximation and its slope
  const auto grid = analytic::linearization_grid();
  const auto line = analytic::logit_linearization(grid);
  if (!(std::abs(line.intercept - 0.76) <= 0.10))
    fail("linearization", "intercept " + std::to_string(line.intercept) + " not within 0.76 +/- 0.10");
  if (!(std::abs(line.slope - opt.slope_constant) <= 0.05))
    fail("linearization", "slope " + std::to_string(line.slope) + " not within 0.05 of " +
                              std::to_string(opt.slope_constant));

  // analytic vs sampler
  out << "step_size\tanalytic_p\tempirical_p\n" << std::fixed << std::setprecision(4);
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const double p = analytic::arctan_acceptance(s);
    const double e = empirical_normal_acceptance(s, opt.attempts, opt.seed);
    out << s << '\t' << p << '\t' << e << '\n';
    if (!(std::abs(p - e) <= 0.01))
      fail("sampler", "s = " + std::to_string(s) + ": empirical " + std::to_string(e));
  }
  out.unsetf(std::ios::floatfield);
  return ok ? kOk : kCheckFailed;
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json slots_json(const std::vector<experiments::SlotSummary>& slots) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : slots)
    arr.push_back({{"update", s.update},
                   {"slot", s.slot},
                   {"tuned_step", s.tuned_step},
                   {"attempts", s.attempts},
                   {"acceptances", s.acceptances},
                   {"acceptance_rate", s.acceptance_rate()}});
  return arr;
}

inline void write_summary(const std::filesystem::path& path, const std::string& title,
                          const experiments::ExampleResult& r,
                          const std::vector<std::string>& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << title << "\n\n";
  out << std::left << std::setw(14) << "slot" << std::setw(22) << "tuned_step"
      << "acceptance\n";
  for (const auto& s : r.slots)
    out << std::left << std::setw(14) << s.slot << std::setw(22) << std::setprecision(10)
        << s.tuned_step << std::setprecision(4) << std::fixed << s.acceptance_rate()
        << std::defaultfloat << '\n';
  out << '\n';
  for (const auto& line : extra) out << line << '\n';
}

template <typename F>
int guarded(std::ostream& err, F body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StructureError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kModelError;
  } catch (const InvalidStateError& e) {
    err << "model error: " << e.what() << '\n';
    return kModelError;
  }
}

}  // namespace detail

/// Loads the model spec named by the config file, or the built-in synthetic
/// dataset when no file is given.
inline experiments::NormalModelSpec load_normal(const RunConfig& rc) {
  if (!rc.config_file) return experiments::synthetic_normal_spec();
  return normal_spec_from(KeyValueConfig::load(*rc.config_file));
}
inline experiments::AnovaModelSpec load_anova(const RunConfig& rc) {
  if (!rc.config_file) return experiments::synthetic_anova_spec();
  return anova_spec_from(KeyValueConfig::load(*rc.config_file));
}

inline int cmd_run_example(const RunConfig& rc, std::ostream& err) {
  return detail::guarded(err, [&] {
    rc.design.validate();
    const auto dir = rc.out_dir;
    std::filesystem::create_directories(dir);
    if (rc.model == "normal") {
      const auto spec = load_normal(rc);
      const auto r = experiments::run_normal_example(spec, rc.design, rc.iterations, rc.seed, dir);
      r.trace.write_csv(dir, "trace_");
      nlohmann::json rep = {{"example", "normal"}, {"slots", detail::slots_json(r.slots)}};
      for (const auto& t : r.tuning) rep["tuning"].push_back(to_json(t));
      detail::write_json(dir / "tuning_report.json", rep);
      detail::write_summary(dir / "summary.txt", "normal example", r,
                            {"posterior mean mu    " + std::to_string(experiments::mean(r.trace.column("mu"))),
                             "posterior mean sigma " + std::to_string(experiments::mean(r.trace.column("sigma")))});
    } else if (rc.model == "anova") {
      const auto spec = load_anova(rc);
      const auto r =
          experiments::run_anova_example(spec, rc.design, rc.iterations, rc.seed, rc.with_block, dir);
      r.trace.write_csv(dir, "trace_");
      experiments::write_anova_figure_csv(dir / "anova_figure.csv", r.trace);
      const double rho = experiments::lag1_autocorrelation(r.trace.column("theta"));
      nlohmann::json rep = {{"example", "anova"},
                            {"with_block", rc.with_block},
                            {"theta_lag1_autocorrelation", rho},
                            {"slots", detail::slots_json(r.slots)}};
      for (const auto& t : r.tuning) rep["tuning"].push_back(to_json(t));
      detail::write_json(dir / "tuning_report.json", rep);
      detail::write_summary(dir / "summary.txt", "one-way ANOVA example", r,
                            {"theta lag-1 autocorrelation " + std::to_string(rho),
                             "posterior mean theta " + std::to_string(experiments::mean(r.trace.column("theta"))),
                             "grand mean of data   " + std::to_string(spec.grand_mean())});
    } else {
      throw ConfigError("unknown example '" + rc.model + "' (expected normal or anova)");
    }
    return static_cast<int>(kOk);
  });
}

/// Trial stage only: tunes every update of the configured model and writes
/// the .tun files plus a JSON report. No production chain.
inline int cmd_tune(const RunConfig& rc, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (!rc.config_file) throw ConfigError("tune needs a model config file");
    rc.design.validate();
    const auto cfg = KeyValueConfig::load(*rc.config_file);
    const std::string model = cfg.get_string("model");
    RunConfig run = rc;
    run.model = model;
    run.iterations = 0;
    std::filesystem::create_directories(run.out_dir);
    experiments::ExampleResult r;
    if (model == "normal")
      r = experiments::run_normal_example(normal_spec_from(cfg), run.design, 0, run.seed, run.out_dir);
    else if (model == "anova")
      r = experiments::run_anova_example(anova_spec_from(cfg), run.design, 0, run.seed, true, run.out_dir);
    else
      throw ConfigError("unknown model '" + model + "'");
    nlohmann::json rep = nlohmann::json::array();
    for (const auto& t : r.tuning) rep.push_back(to_json(t));
    detail::write_json(run.out_dir / "tuning_report.json", rep);
    return static_cast<int>(kOk);
  });
}

inline int cmd_simulate(const RunConfig& rc, std::ostream& err) {
  return detail::guarded(err, [&] {
    std::vector<int> ks, sizes, attempts;
    if (rc.full_factorial) {
      for (int k = -7; k <= 7; ++k) ks.push_back(k);
      sizes = {3, 5, 7, 9, 11, 13, 15};
    } else {
      ks = {rc.guess_exponent};
      sizes = {rc.design.num_step_sizes};
    }
    if (rc.attempts_only) attempts = {*rc.attempts_only};
    else attempts = {10, 20, 30, 40, 50};
    for (int m : sizes)
      if (m < 3 || m % 2 == 0) throw ConfigError("--sizes must be odd and at least 3");
    experiments::SimulationScenario base;
    base.target = rc.design.target_acceptance;
    const auto rows =
        experiments::simulate_design_table(ks, sizes, attempts, rc.replications, rc.seed, base);
    experiments::write_design_csv(rc.out_dir / "simulation.csv", rows);
    return static_cast<int>(kOk);
  });
}

}  // namespace rwtune::cli
