#pragma once

// Reproduction harness: the designed simulation of tuning quality, and the
// two worked examples (normal mean/sd, poorly parameterized one-way ANOVA).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rwtune/analytic.hpp"
#include "rwtune/logistic.hpp"
#include "rwtune/model.hpp"
#include "rwtune/sampler.hpp"
#include "rwtune/tuner.hpp"

namespace rwtune::experiments {

// --- simulation of the tuning design -----------------------------------------

/// One cell of the design experiment. Acceptances are drawn directly from
/// the assumed logistic curve logit^-1(a + b log s); no MCMC is involved.
struct SimulationScenario {
  double true_intercept = -5.7;
  double true_slope = kFixedSlope;
  int guess_exponent = 0;  // initial guess = base_step * 2^k
  int num_sizes = 13;
  int attempts = 50;
  int replications = 100;
  double window_low = 0.25;
  double window_high = 0.45;
  double target = TrialDesign{}.target_acceptance;
  double base_step = 0.01;
  SlopePrior prior{};

  TrialDesign design() const {
    TrialDesign d;
    d.num_step_sizes = num_sizes;
    d.attempts_per_size = attempts;
    d.target_acceptance = target;
    return d;
  }
  double initial_guess() const { return base_step * std::ldexp(1.0, guess_exponent); }
  std::vector<double> grid() const { return trial_grid(initial_guess(), design()); }
  double true_acceptance(double s) const {
    return analytic::logit_inverse(true_intercept + true_slope * std::log(s));
  }
  bool in_window(double rate) const { return rate >= window_low && rate <= window_high; }
};

struct SimulationOutcome {
  int successes = 0;
  int replications = 0;
  std::vector<double> grid;
  std::vector<long> pooled_attempts;     // summed n_i over replications
  std::vector<long> pooled_acceptances;  // summed x_i over replications

  double success_rate() const {
    return replications ? static_cast<double>(successes) / replications : 0.0;
  }
};

/// Result of one replication: the recommendation and whether the true
/// curve puts it inside the success window.
struct Replication {
  AcceptanceRecord record;
  double recommendation = 0.0;
  bool success = false;
};

inline Replication simulate_replication(const SimulationScenario& sc, RandomSource& src) {
  Replication rep;
  for (double s : sc.grid()) {
    std::binomial_distribution<long> draw(sc.attempts, sc.true_acceptance(s));
    rep.record.add(s, sc.attempts, draw(src.engine()));
  }
  const LogisticFit fit = fit_fixed_slope(rep.record, kFixedSlope, sc.prior);
  rep.recommendation = recommend_step(fit, sc.target);
  rep.success = sc.in_window(sc.true_acceptance(rep.recommendation));
  return rep;
}

/// Replication r uses the substream derived from (seed, r), so the count is
/// independent of evaluation order.
inline SimulationOutcome simulate_tuning_design(const SimulationScenario& sc, std::uint64_t seed) {
  if (sc.replications < 1) throw StructureError("simulation needs at least one replication");
  SimulationOutcome out;
  out.replications = sc.replications;
  out.grid = sc.grid();
  out.pooled_attempts.assign(out.grid.size(), 0);
  out.pooled_acceptances.assign(out.grid.size(), 0);
  for (int r = 0; r < sc.replications; ++r) {
    RandomSource src = RandomSource::derived(seed, static_cast<std::uint64_t>(r));
    const Replication rep = simulate_replication(sc, src);
    out.successes += rep.success ? 1 : 0;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      out.pooled_attempts[i] += rep.record.attempts[i];
      out.pooled_acceptances[i] += rep.record.acceptances[i];
    }
  }
  return out;
}

struct DesignRow {
  int guess_exponent = 0;
  int num_sizes = 0;
  int attempts = 0;
  int successes = 0;
  int replications = 0;

  int total_trials() const { return num_sizes * attempts; }
  double success_rate() const { return static_cast<double>(successes) / replications; }
};

/// Full factorial over guess exponents, grid sizes and attempts. Each cell
/// draws from its own stream derived from (seed, "k/m/n").
inline std::vector<DesignRow> simulate_design_table(const std::vector<int>& exponents,
                                                    const std::vector<int>& sizes,
                                                    const std::vector<int>& attempts,
                                                    int replications, std::uint64_t seed,
                                                    SimulationScenario base = {}) {
  std::vector<DesignRow> rows;
  for (int k : exponents)
    for (int m : sizes)
      for (int n : attempts) {
        SimulationScenario sc = base;
        sc.guess_exponent = k;
        sc.num_sizes = m;
        sc.attempts = n;
        sc.replications = replications;
        const auto cell_seed = RandomSource::derive_seed(
            seed, std::to_string(k) + "/" + std::to_string(m) + "/" + std::to_string(n));
        const auto res = simulate_tuning_design(sc, cell_seed);
        rows.push_back({k, m, n, res.successes, res.replications});
      }
  return rows;
}

/// Smallest total trial count among designs for exponent k whose success
/// rate reaches `level`.
inline std::optional<int> minimal_trials(const std::vector<DesignRow>& rows, int k, double level) {
  std::optional<int> best;
  for (const auto& r : rows)
    if (r.guess_exponent == k && r.success_rate() >= level && (!best || r.total_trials() < *best))
      best = r.total_trials();
  return best;
}

inline void write_design_csv(const std::filesystem::path& path, const std::vector<DesignRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "k,num_sizes,attempts,successes,replications\n";
  for (const auto& r : rows)
    out << r.guess_exponent << ',' << r.num_sizes << ',' << r.attempts << ',' << r.successes << ','
        << r.replications << '\n';
}

// --- summaries ---------------------------------------------------------------

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double lag1_autocorrelation(const std::vector<double>& xs) {
  const double m = mean(xs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

struct SlotSummary {
  std::string update;
  std::string slot;
  double tuned_step = 0.0;
  long attempts = 0;
  long acceptances = 0;

  double acceptance_rate() const {
    return attempts ? static_cast<double>(acceptances) / static_cast<double>(attempts) : 0.0;
  }
};

struct ExampleResult {
  std::vector<TuningReport> tuning;
  std::vector<SlotSummary> slots;
  ChainTrace trace;
  Configuration final_state;
};

/// Adds a tuner per update, runs the trial stage as burn-in, then the
/// production chain with frozen step sizes.
inline ExampleResult run_tuned_chain(Chain& chain, std::vector<UpdateTuner*> tuners,
                                     std::size_t iterations) {
  std::size_t trial = 0;
  for (auto* t : tuners) trial = std::max(trial, t->design().trial_iterations());
  chain.run(trial);
  for (auto* t : tuners) t->inner().reset_counters();

  ExampleResult result;
  result.trace = ChainTrace(chain.state());
  chain.run(iterations, &result.trace);
  for (auto* t : tuners) {
    if (!t->report()) throw std::logic_error("update '" + t->name() + "' did not finish tuning");
    result.tuning.push_back(*t->report());
    const auto& inner = t->inner();
    for (std::size_t j = 0; j < inner.num_slots(); ++j)
      result.slots.push_back({t->name(), inner.slot_name(j), inner.step_size(chain.state(), j),
                              inner.counters()[j].attempts, inner.counters()[j].acceptances});
  }
  result.final_state = chain.state();
  return result;
}

// --- normal example ------------------------------------------------------------

/// y_i ~ N(mu, sigma^2), mu ~ N(mu_prior_mean, mu_prior_sd^2),
/// sigma ~ Gamma(shape, scale) with prior mean shape * scale.
struct NormalModelSpec {
  std::vector<double> y;
  double mu_prior_mean = 0.0;
  double mu_prior_sd = 100.0;
  double sigma_shape = 2.0;
  double sigma_scale = 2.0;
  double mu_init = 0.0;
  double sigma_init = 1.0;
  double mu_step = 1.0;     // initial guess
  double sigma_step = 0.5;  // initial guess, log scale
  std::optional<double> known_sigma;

  void validate() const {
    if (y.empty()) throw StructureError("normal model needs data");
    if (!(mu_prior_sd > 0.0 && sigma_shape > 0.0 && sigma_scale > 0.0))
      throw StructureError("normal model prior parameters must be positive");
    if (known_sigma && !(*known_sigma > 0.0)) throw StructureError("known sigma must be positive");
  }
};

inline TargetModel make_normal_model(const NormalModelSpec& spec) {
  spec.validate();
  std::vector<ParameterLayout> layout{{"mu", 1}};
  if (!spec.known_sigma) layout.push_back({"sigma", 1});
  return TargetModel(std::move(layout), [spec](const Configuration& c) {
    const double mu = c[0].value(0);
    const double sigma = spec.known_sigma ? *spec.known_sigma : c[1].value(0);
    double lp = logpdf::normal(mu, spec.mu_prior_mean, spec.mu_prior_sd);
    if (!spec.known_sigma) {
      lp += logpdf::gamma(sigma, spec.sigma_shape, spec.sigma_scale);
      if (lp == kNegInf) return kNegInf;
    }
    for (double v : spec.y) lp += logpdf::normal(v, mu, sigma);
    return lp;
  });
}

inline Configuration normal_initial_state(const NormalModelSpec& spec) {
  std::vector<ParameterState> params;
  params.emplace_back("mu", std::vector<double>{spec.mu_init}, ScaleType::Linear, spec.mu_step);
  if (!spec.known_sigma)
    params.emplace_back("sigma", std::vector<double>{spec.sigma_init}, ScaleType::Log, spec.sigma_step);
  return Configuration(std::move(params));
}

/// 50 draws from N(5, 2^2) with the given seed.
inline NormalModelSpec synthetic_normal_spec(std::uint64_t seed = 20110301) {
  NormalModelSpec spec;
  RandomSource src(seed);
  for (int i = 0; i < 50; ++i) spec.y.push_back(5.0 + 2.0 * src.normal());
  spec.mu_init = 4.0;
  spec.sigma_init = 1.5;
  return spec;
}

inline ExampleResult run_normal_example(const NormalModelSpec& spec, const TrialDesign& design,
                                        std::size_t iterations, std::uint64_t seed,
                                        const std::optional<std::filesystem::path>& tun_dir = {}) {
  Chain chain(make_normal_model(spec), normal_initial_state(spec), seed);
  std::vector<UpdateTuner*> tuners;
  for (const auto& p : chain.state()) {
    auto& t = chain.emplace<UpdateTuner>(std::make_unique<SingleSiteUpdate>(chain.state(), p.name()),
                                         design);
    if (tun_dir) t.set_output_dir(*tun_dir);
    tuners.push_back(&t);
  }
  return run_tuned_chain(chain, tuners, iterations);
}

/// Conjugate posterior (mean, sd) of mu when sigma is known.
inline std::pair<double, double> conjugate_mu_posterior(const NormalModelSpec& spec, double sigma) {
  const double prior_prec = 1.0 / (spec.mu_prior_sd * spec.mu_prior_sd);
  const double data_prec = static_cast<double>(spec.y.size()) / (sigma * sigma);
  const double sum = std::accumulate(spec.y.begin(), spec.y.end(), 0.0);
  const double prec = prior_prec + data_prec;
  return {(spec.mu_prior_mean * prior_prec + sum / (sigma * sigma)) / prec, 1.0 / std::sqrt(prec)};
}

// --- one-way ANOVA example ---------------------------------------------------------

/// y_ij ~ N(mu_i, sigma^2), mu_i ~ N(theta, delta^2), theta flat,
/// sigma ~ Gamma(sigma_shape, sigma_scale), delta ~ Gamma(delta_shape, delta_scale).
struct AnovaModelSpec {
  std::vector<std::vector<double>> groups;
  double sigma_shape = 2.0;
  double sigma_scale = 1.0;
  double delta_shape = 20.0;
  double delta_scale = 0.005;
  double theta_init = 0.0;
  double sigma_init = 1.0;
  double delta_init = 0.1;
  double mu_step = 0.1;
  double theta_step = 0.1;
  double sigma_step = 0.2;
  double delta_step = 0.2;
  double block_step = 0.1;

  void validate() const {
    if (groups.size() < 2) throw StructureError("ANOVA model needs at least two groups");
    for (const auto& g : groups)
      if (g.empty()) throw StructureError("ANOVA groups must be non-empty");
    if (!(sigma_shape > 0.0 && sigma_scale > 0.0 && delta_shape > 0.0 && delta_scale > 0.0))
      throw StructureError("ANOVA prior parameters must be positive");
  }

  double grand_mean() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
      sum += std::accumulate(g.begin(), g.end(), 0.0);
      n += g.size();
    }
    return sum / static_cast<double>(n);
  }
};

inline TargetModel make_anova_model(const AnovaModelSpec& spec) {
  spec.validate();
  const std::size_t groups = spec.groups.size();
  return TargetModel({{"mu", groups}, {"theta", 1}, {"sigma", 1}, {"delta", 1}},
                     [spec](const Configuration& c) {
                       const auto mu = c[0].values();
                       const double theta = c[1].value(0);
                       const double sigma = c[2].value(0);
                       const double delta = c[3].value(0);
                       double lp = logpdf::gamma(sigma, spec.sigma_shape, spec.sigma_scale) +
                                   logpdf::gamma(delta, spec.delta_shape, spec.delta_scale);
                       if (lp == kNegInf) return kNegInf;
                       for (std::size_t i = 0; i < spec.groups.size(); ++i) {
                         lp += logpdf::normal(mu[i], theta, delta);
                         for (double v : spec.groups[i]) lp += logpdf::normal(v, mu[i], sigma);
                       }
                       return lp;
                     });
}

inline Configuration anova_initial_state(const AnovaModelSpec& spec) {
  std::vector<double> mu;
  for (const auto& g : spec.groups) mu.push_back(experiments::mean(g));
  std::vector<ParameterState> params;
  params.emplace_back("mu", mu, ScaleType::Linear, spec.mu_step);
  params.emplace_back("theta", std::vector<double>{spec.theta_init}, ScaleType::Linear, spec.theta_step);
  params.emplace_back("sigma", std::vector<double>{spec.sigma_init}, ScaleType::Log, spec.sigma_step);
  params.emplace_back("delta", std::vector<double>{spec.delta_init}, ScaleType::Log, spec.delta_step);
  return Configuration(std::move(params));
}

/// Three groups of five from mu_i ~ N(10, 0.1^2), y_ij ~ N(mu_i, 1): the
/// between-group sd is a tenth of the within-group sd, so mu and theta are
/// tightly coupled in the posterior.
inline AnovaModelSpec synthetic_anova_spec(std::uint64_t seed = 20110302) {
  AnovaModelSpec spec;
  RandomSource src(seed);
  const double theta = 10.0, delta = 0.1, sigma = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double mu = theta + delta * src.normal();
    std::vector<double> g;
    for (int j = 0; j < 5; ++j) g.push_back(mu + sigma * src.normal());
    spec.groups.push_back(std::move(g));
  }
  spec.theta_init = spec.grand_mean();
  return spec;
}

inline constexpr const char* kBlockUpdateName = "mu_theta";

inline ExampleResult run_anova_example(const AnovaModelSpec& spec, const TrialDesign& design,
                                       std::size_t iterations, std::uint64_t seed,
                                       bool with_block = true,
                                       const std::optional<std::filesystem::path>& tun_dir = {}) {
  Chain chain(make_anova_model(spec), anova_initial_state(spec), seed);
  std::vector<UpdateTuner*> tuners;
  auto add = [&](std::unique_ptr<TunableUpdate> u) {
    auto& t = chain.emplace<UpdateTuner>(std::move(u), design);
    if (tun_dir) t.set_output_dir(*tun_dir);
    tuners.push_back(&t);
  };
  for (const char* name : {"mu", "theta", "sigma", "delta"})
    add(std::make_unique<SingleSiteUpdate>(chain.state(), name));
  if (with_block) {
    std::vector<ComponentRef> refs;
    for (std::size_t i = 0; i < spec.groups.size(); ++i) refs.push_back({"mu", i});
    refs.push_back({"theta", 0});
    add(std::make_unique<AddCommonUpdate>(kBlockUpdateName, std::move(refs), spec.block_step));
  }
  return run_tuned_chain(chain, tuners, iterations);
}

/// mu[0], theta, log sigma and log delta per iteration, for trace plots.
inline void write_anova_figure_csv(const std::filesystem::path& path, const ChainTrace& trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto mu1 = trace.column("mu", 0), theta = trace.column("theta"),
             sigma = trace.column("sigma"), delta = trace.column("delta");
  out << "iteration,mu[0],theta,log_sigma,log_delta\n";
  out.precision(17);
  for (std::size_t i = 0; i < mu1.size(); ++i)
    out << i + 1 << ',' << mu1[i] << ',' << theta[i] << ',' << std::log(sigma[i]) << ','
        << std::log(delta[i]) << '\n';
}

}  // namespace rwtune::experiments
