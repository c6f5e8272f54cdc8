#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rwtune/cli.hpp"

using rwtune::cli::RunConfig;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<int> sizes;
  std::optional<int> attempts;
  std::optional<int> cycles;
  std::optional<double> target;
  std::optional<std::string> out_dir;
};

void add_run_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--iterations", o.iterations, "production iterations");
  sub->add_option("--sizes", o.sizes, "number of trial step sizes (odd)");
  sub->add_option("--attempts", o.attempts, "attempts per trial step size");
  sub->add_option("--cycles", o.cycles, "trial cycles");
  sub->add_option("--target", o.target, "target acceptance rate");
  sub->add_option("--out-dir", o.out_dir, "output directory");
}

void apply(const Overrides& o, RunConfig& rc) {
  if (o.seed) rc.seed = *o.seed;
  if (o.iterations) rc.iterations = *o.iterations;
  if (o.sizes) rc.design.num_step_sizes = *o.sizes;
  if (o.attempts) rc.design.attempts_per_size = *o.attempts;
  if (o.cycles) rc.design.cycles = *o.cycles;
  if (o.target) rc.design.target_acceptance = *o.target;
  if (o.out_dir) rc.out_dir = *o.out_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-tuning random-walk Metropolis sampler"};
  app.require_subcommand(1);

  rwtune::cli::ValidateOptions vopt;
  auto* validate = app.add_subcommand("validate", "check the acceptance-rate law against quadrature and the sampler");
  validate->add_option("--seed", vopt.seed, "seed for the empirical rates");
  validate->add_option("--slope-constant", vopt.slope_constant)->group("");

  RunConfig rc;
  Overrides ov;
  std::string config_path;

  auto* tune = app.add_subcommand("tune", "run the trial stage for a model config and write .tun files");
  tune->add_option("--config", config_path, "model config file")->required();
  add_run_flags(tune, ov);

  auto* example = app.add_subcommand("run-example", "tune and run the normal or ANOVA example");
  example->add_option("model", rc.model, "normal or anova")->required()->check(CLI::IsMember({"normal", "anova"}));
  example->add_option("--config", config_path, "model config file (default: built-in synthetic data)");
  example->add_flag("!--no-block", rc.with_block, "ANOVA: drop the mu/theta block update");
  add_run_flags(example, ov);

  auto* simulate = app.add_subcommand("simulate", "simulate the tuning design against a known logistic curve");
  simulate->add_option("--guess-exponent", rc.guess_exponent, "initial guess = 0.01 * 2^k");
  simulate->add_option("--replications", rc.replications, "replications per design cell");
  simulate->add_flag("--full", rc.full_factorial, "sweep k = -7..7 and sizes 3..15");
  std::optional<int> sim_attempts;
  std::optional<int> sim_sizes;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_out;
  simulate->add_option("--attempts", sim_attempts, "single attempts value (default sweep 10..50)");
  simulate->add_option("--sizes", sim_sizes, "number of trial step sizes");
  simulate->add_option("--seed", sim_seed, "master seed");
  simulate->add_option("--out-dir", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rwtune::cli::kOk : rwtune::cli::kConfigError;
  }

  if (validate->parsed()) return rwtune::cli::cmd_validate(vopt, std::cout, std::cerr);

  if (!config_path.empty()) {
    rc.config_file = config_path;
    try {
      rwtune::cli::apply_run_keys(rwtune::cli::KeyValueConfig::load(config_path), rc);
    } catch (const rwtune::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return rwtune::cli::kConfigError;
    }
  }
  apply(ov, rc);

  if (tune->parsed()) return rwtune::cli::cmd_tune(rc, std::cerr);
  if (example->parsed()) return rwtune::cli::cmd_run_example(rc, std::cerr);

  if (sim_attempts) rc.attempts_only = *sim_attempts;
  if (sim_sizes) rc.design.num_step_sizes = *sim_sizes;
  if (sim_seed) rc.seed = *sim_seed;
  if (sim_out) rc.out_dir = *sim_out;
  return rwtune::cli::cmd_simulate(rc, std::cerr);
}
