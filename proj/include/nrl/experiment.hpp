#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrl/estimators.hpp"
#include "nrl/gaussian_analytics.hpp"
#include "nrl/integrators.hpp"
#include "nrl/quadrature.hpp"
#include "nrl/targets.hpp"

namespace nrl {

// Config validation failure; `problems` lists every offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ExperimentConfig {
  int schema_version = 1;

  std::string target_name;
  nlohmann::json target_params = nlohmann::json::object();
  std::string observable_name;
  nlohmann::json observable_params = nlohmann::json::object();
  std::string perturbation_name = "none";
  nlohmann::json perturbation_params = nlohmann::json::object();
  std::string scheme_name = "em";

  std::vector<double> alphas;
  std::vector<double> dts;
  std::optional<std::uint64_t> n_steps;
  std::optional<std::uint64_t> gradient_budget;
  std::uint64_t n_chains = 1;
  std::uint64_t seed = 0;
  double burn_in_fraction = 0.1;
  std::string output = "out.csv";
  int threads = 0;  // 0 = all hardware threads
  std::optional<double> reference;
  bool include_mala_baseline = false;
  std::optional<std::vector<double>> initial;
  int quadrature_grid = 0;  // 0 = auto-size from the integration box
  double quadrature_tol = 1e-8;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
};

// Config resolved into runnable objects.
struct ExperimentSetup {
  Target target;
  std::function<double(const Eigen::VectorXd&)> observable;
  std::function<Perturbation(double alpha)> perturbation_factory;
  Scheme scheme = Scheme::em;
  Eigen::VectorXd initial;
  // Quadratic observable pieces when available (analytic subcommand).
  std::optional<Eigen::MatrixXd> observable_m;
  std::optional<Eigen::VectorXd> observable_l;
};

ExperimentSetup build_setup(const ExperimentConfig& config);

// One (alpha, dt, scheme) cell of an experiment table.
struct ResultRow {
  double alpha = 0.0;
  double dt = 0.0;
  std::string scheme;
  std::optional<double> estimate;
  std::optional<double> asym_var;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<double> mse;
  std::optional<double> relative_mse;
  std::optional<double> acceptance_rate;
  std::uint64_t blowups = 0;
  std::uint64_t gradient_evals = 0;
  double wall_seconds = 0.0;
};

struct AnalyticRow {
  double alpha = 0.0;
  double sigma2 = 0.0;
  double sigma2_limit = 0.0;
  double sigma2_lower_bound = 0.0;
};

struct ReferenceRow {
  std::string target;
  std::string observable;
  double value = 0.0;
  double error_estimate = 0.0;
};

// Experiment engines behind the CLI subcommands.
std::vector<ResultRow> sweep_alpha(const ExperimentConfig& config);
std::vector<ResultRow> sweep_dt(const ExperimentConfig& config);
std::vector<AnalyticRow> analytic(const ExperimentConfig& config);
std::vector<ResultRow> mh_study(const ExperimentConfig& config);
ReferenceRow reference_value(const ExperimentConfig& config);

bool all_cells_blown_up(const std::vector<ResultRow>& rows);

// Fixed column order; floats in scientific notation with 17 significant
// digits.  wall_seconds is the only column outside the determinism contract.
std::string result_csv(const std::vector<ResultRow>& rows);
std::string analytic_csv(const std::vector<AnalyticRow>& rows);
std::string reference_csv(const std::vector<ReferenceRow>& rows);

void write_file(const std::string& path, const std::string& contents);

}  // namespace nrl
