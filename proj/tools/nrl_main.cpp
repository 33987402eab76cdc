// nrl: config-driven experiments with nonreversible Langevin samplers.
//
// Subcommands emit CSV tables: alpha sweeps of the asymptotic variance,
// fixed-budget step-size sweeps of the mean squared error, closed-form
// Gaussian variance curves, the Metropolis-Hastings proposal study, and
// deterministic quadrature references.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nrl/experiment.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitAllBlownUp = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed_override, "override the config seed");
  cmd->add_option("--out", args.out_override, "override the config output path");
}

nrl::ExperimentConfig load_config(const CommonArgs& args) {
  nrl::ExperimentConfig config = nrl::ExperimentConfig::from_file(args.config_path);
  if (args.seed_override) config.seed = *args.seed_override;
  if (args.out_override) config.output = *args.out_override;
  if (const char* env = std::getenv("NRL_THREADS")) {
    config.threads = std::max(0, std::atoi(env));
  }
  return config;
}

int emit(const nrl::ExperimentConfig& config, const std::vector<nrl::ResultRow>& rows) {
  nrl::write_file(config.output, nrl::result_csv(rows));
  std::cout << rows.size() << " rows -> " << config.output << "\n";
  if (nrl::all_cells_blown_up(rows)) {
    std::cerr << "all cells blew up; statistics unavailable\n";
    return kExitAllBlownUp;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonreversible Langevin sampler experiments"};
  app.require_subcommand(1);

  CommonArgs sweep_alpha_args, sweep_dt_args, analytic_args, mh_args, reference_args;
  CLI::App* cmd_sweep_alpha =
      app.add_subcommand("sweep-alpha", "variance of pi_T(f) across perturbation strengths");
  add_common(cmd_sweep_alpha, sweep_alpha_args);
  CLI::App* cmd_sweep_dt =
      app.add_subcommand("sweep-dt", "MSE across step sizes at a fixed gradient budget");
  add_common(cmd_sweep_dt, sweep_dt_args);
  CLI::App* cmd_analytic =
      app.add_subcommand("analytic", "closed-form Gaussian asymptotic variance curves");
  add_common(cmd_analytic, analytic_args);
  CLI::App* cmd_mh =
      app.add_subcommand("mh-study", "Metropolis-Hastings with nonreversible proposals");
  add_common(cmd_mh, mh_args);
  CLI::App* cmd_reference =
      app.add_subcommand("reference", "deterministic quadrature reference values");
  add_common(cmd_reference, reference_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_sweep_alpha->parsed()) {
      const auto config = load_config(sweep_alpha_args);
      return emit(config, nrl::sweep_alpha(config));
    }
    if (cmd_sweep_dt->parsed()) {
      const auto config = load_config(sweep_dt_args);
      return emit(config, nrl::sweep_dt(config));
    }
    if (cmd_analytic->parsed()) {
      const auto config = load_config(analytic_args);
      nrl::write_file(config.output, nrl::analytic_csv(nrl::analytic(config)));
      std::cout << "analytic table -> " << config.output << "\n";
      return 0;
    }
    if (cmd_mh->parsed()) {
      const auto config = load_config(mh_args);
      return emit(config, nrl::mh_study(config));
    }
    if (cmd_reference->parsed()) {
      const auto config = load_config(reference_args);
      nrl::write_file(config.output, nrl::reference_csv({nrl::reference_value(config)}));
      std::cout << "reference -> " << config.output << "\n";
      return 0;
    }
  } catch (const nrl::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
