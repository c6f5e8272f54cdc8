#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "rwtune/experiments.hpp"
#include "support.hpp"

using namespace rwtune;
using namespace rwtune::experiments;
namespace rt = rwtune::testing;

namespace {

bool in_window(double r) { return r >= 0.25 && r <= 0.45; }

}  // namespace

TEST(Scenario, WorkedGridFollowsTruthCurve) {
  SimulationScenario sc;
  sc.guess_exponent = 4;
  sc.num_sizes = 9;
  EXPECT_NEAR(sc.initial_guess(), 0.16, 1e-15);
  const auto g = sc.grid();
  ASSERT_EQ(g.size(), 9u);
  EXPECT_NEAR(g.front(), 0.01, 1e-15);
  EXPECT_NEAR(g.back(), 2.56, 1e-14);
  // The smallest step sits at the optimum; larger steps accept less often.
  EXPECT_NEAR(sc.true_acceptance(0.01), 0.368, 0.002);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(sc.true_acceptance(g[i]), sc.true_acceptance(g[i - 1]));
  EXPECT_NEAR(sc.true_acceptance(2.56), 1.0 / (1.0 + std::exp(5.7 - kFixedSlope * std::log(2.56))), 1e-15);
}

TEST(Simulation, BinomialDrawsMatchTruth) {
  SimulationScenario sc;
  sc.guess_exponent = 1;
  sc.num_sizes = 5;
  sc.attempts = 50;
  sc.replications = 10000;
  const auto out = simulate_tuning_design(sc, 99);
  for (std::size_t i = 0; i < out.grid.size(); ++i)
    EXPECT_NEAR(static_cast<double>(out.pooled_acceptances[i]) / out.pooled_attempts[i],
                sc.true_acceptance(out.grid[i]), 0.005);
}

TEST(Simulation, PerfectGuessSmallDesign) {
  SimulationScenario sc;
  sc.num_sizes = 3;
  sc.attempts = 40;
  sc.replications = 20000;
  // Converged rate is about 0.944: close to, but under, a 95% bar.
  const double rate = simulate_tuning_design(sc, 1).success_rate();
  EXPECT_GT(rate, 0.93);
  EXPECT_LT(rate, 0.955);
}

TEST(Simulation, DeterministicPerSeed) {
  SimulationScenario sc;
  sc.guess_exponent = 3;
  EXPECT_EQ(simulate_tuning_design(sc, 5).successes, simulate_tuning_design(sc, 5).successes);
  sc.replications = 0;
  EXPECT_THROW(simulate_tuning_design(sc, 5), StructureError);
}

TEST(DesignTable, MinimalTrialsAndCsv) {
  const auto rows = simulate_design_table({0, 6}, {3, 9, 15}, {10, 40}, 400, 3);
  ASSERT_EQ(rows.size(), 12u);
  // A perfect guess with 3x40 sits just under 95% (about 0.944), so check a lower bar here.
  EXPECT_GE(rows[1].success_rate(), 0.92);
  const auto k0 = minimal_trials(rows, 0, 0.90);
  ASSERT_TRUE(k0.has_value());
  EXPECT_LE(*k0, 120);
  const auto k6 = minimal_trials(rows, 6, 0.95);
  if (k6) {
    EXPECT_GE(*k6, 15 * 10);
  }
  const auto dir = rt::scratch_dir("design_csv");
  write_design_csv(dir / "t.csv", rows);
  std::ifstream in(dir / "t.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,num_sizes,attempts,successes,replications");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 7), "0,3,10,");
}

TEST(Summaries, Lag1AutocorrelationOfAr1) {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> xs{0.0};
  for (int i = 0; i < 200000; ++i) xs.push_back(0.7 * xs.back() + z(eng));
  EXPECT_NEAR(lag1_autocorrelation(xs), 0.7, 0.01);
  EXPECT_NEAR(mean(std::vector<double>{1.0, 2.0, 6.0}), 3.0, 1e-15);
}

TEST(NormalExample, TunedRatesInWindow) {
  const auto r = run_normal_example(synthetic_normal_spec(), TrialDesign{}, 10000, 17);
  ASSERT_EQ(r.slots.size(), 2u);
  EXPECT_EQ(r.slots[0].slot, "mu");
  EXPECT_EQ(r.slots[1].slot, "sigma");
  for (const auto& s : r.slots) {
    EXPECT_EQ(s.attempts, 10000);
    EXPECT_TRUE(in_window(s.acceptance_rate())) << s.slot << " " << s.acceptance_rate();
  }
  EXPECT_EQ(r.trace.iterations(), 10000u);
}

TEST(NormalExample, GuessOffBySixtyFourStillTunes) {
  for (double factor : {64.0, 1.0 / 64.0}) {
    auto spec = synthetic_normal_spec();
    spec.mu_step = 0.75 * factor;
    spec.sigma_step = 0.27 * factor;
    const auto r = run_normal_example(spec, TrialDesign{}, 10000, 23);
    for (const auto& s : r.slots)
      EXPECT_TRUE(in_window(s.acceptance_rate())) << "factor " << factor << " " << s.slot << " "
                                                  << s.acceptance_rate();
  }
}

TEST(NormalExample, KnownSigmaMatchesConjugatePosterior) {
  auto spec = synthetic_normal_spec();
  spec.known_sigma = 2.0;
  const auto r = run_normal_example(spec, TrialDesign{}, 40000, 29);
  const auto [pm, psd] = conjugate_mu_posterior(spec, 2.0);
  // Oracle written out: precision-weighted mean of prior and data.
  double sum = 0.0;
  for (double y : spec.y) sum += y;
  const double prec = 1.0 / (spec.mu_prior_sd * spec.mu_prior_sd) + spec.y.size() / 4.0;
  EXPECT_NEAR(pm, (spec.mu_prior_mean / (spec.mu_prior_sd * spec.mu_prior_sd) + sum / 4.0) / prec, 1e-12);
  EXPECT_NEAR(psd, std::sqrt(1.0 / prec), 1e-12);
  const auto mu = r.trace.column("mu");
  EXPECT_LT(std::abs(rt::sample_mean(mu) - pm), 3.0 * psd);
  const auto c = rt::moments(mu, pm);
  EXPECT_TRUE(rt::moments_match(c, pm, psd * psd)) << c.mean << " " << c.var;
}

TEST(NormalExample, SpecValidation) {
  NormalModelSpec spec;
  EXPECT_THROW(make_normal_model(spec), StructureError);
  spec.y = {1.0};
  spec.sigma_shape = 0.0;
  EXPECT_THROW(make_normal_model(spec), StructureError);
}

TEST(AnovaExample, SevenSlotsInWindow) {
  const auto spec = synthetic_anova_spec();
  ASSERT_EQ(spec.groups.size(), 3u);
  const auto r = run_anova_example(spec, TrialDesign{}, 10000, 37);
  ASSERT_EQ(r.slots.size(), 7u);
  EXPECT_EQ(r.slots.back().slot, kBlockUpdateName);
  for (const auto& s : r.slots) EXPECT_TRUE(in_window(s.acceptance_rate())) << s.slot << " " << s.acceptance_rate();
}

TEST(AnovaExample, BlockMoveImprovesMixing) {
  const auto spec = synthetic_anova_spec();
  const auto with = run_anova_example(spec, TrialDesign{}, 10000, 41, true);
  const auto without = run_anova_example(spec, TrialDesign{}, 10000, 41, false);
  EXPECT_EQ(without.slots.size(), 6u);
  EXPECT_LT(lag1_autocorrelation(with.trace.column("theta")), lag1_autocorrelation(without.trace.column("theta")));
}

TEST(AnovaExample, ThetaMeanMatchesLongReferenceRun) {
  const auto spec = synthetic_anova_spec();
  const auto run = run_anova_example(spec, TrialDesign{}, 10000, 43);
  const auto ref = run_anova_example(spec, TrialDesign{}, 100000, 44);
  const auto a = run.trace.column("theta"), b = ref.trace.column("theta");
  const double se = std::hypot(rt::batch_means_se(a), rt::batch_means_se(b));
  EXPECT_LT(std::abs(rt::sample_mean(a) - rt::sample_mean(b)), 4.0 * se);
  // Balanced data and a flat prior on theta: the posterior centres on the grand mean.
  EXPECT_LT(std::abs(rt::sample_mean(b) - spec.grand_mean()), 4.0 * rt::batch_means_se(b) + 0.1);
}

TEST(AnovaExample, FigureCsv) {
  const auto r = run_anova_example(synthetic_anova_spec(), TrialDesign{}, 50, 47);
  const auto dir = rt::scratch_dir("anova_fig");
  write_anova_figure_csv(dir / "fig.csv", r.trace);
  std::ifstream in(dir / "fig.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,mu[0],theta,log_sigma,log_delta");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50);
}

TEST(AnovaExample, SpecValidation) {
  AnovaModelSpec spec;
  EXPECT_THROW(make_anova_model(spec), StructureError);
  spec.groups = {{1.0}, {}};
  EXPECT_THROW(make_anova_model(spec), StructureError);
}
