#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "epinet/denoise.hpp"
#include "epinet/epidemic.hpp"
#include "epinet/estimate.hpp"
#include "epinet/graph.hpp"

namespace epinet {

enum class Scenario {
  denoise,
  forecast,
  params,
  missing,
  false_positive,
  county_smooth,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key/value experiment description; parsed from a JSON object, with
// every knob overridable from the command line. Field applicability depends
// on the scenario (validated up front).
struct ExperimentConfig {
  Scenario scenario = Scenario::denoise;

  // graph
  std::string graph_model = "knn";  // erdos_renyi | knn | small_world |
                                    // preferential_attachment | sbm |
                                    // grid2d | star | complete | edge_list
  int n = 1000;
  double er_p = 0.01;
  int knn_k = 5;
  int sw_m = 4;
  double sw_p = 0.1;
  int pa_m = 2;
  std::vector<int> sbm_sizes;
  double sbm_p_in = 0.05;
  double sbm_p_out = 0.005;
  int grid_rows = 0;
  int grid_cols = 0;
  std::string edge_list_path;
  bool one_based = false;

  // epidemic
  double beta = 0.5;
  double gamma = 0.1;
  int k0 = 30;
  int horizon = 2;
  int window = 20;
  double alpha = 0.0;
  double missing_fraction = 0.0;
  bool unchecked = false;  // skip the well-posedness hard error

  // replication
  int replicates = 1;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  // regularization
  std::string lambda_policy = "cv";  // fixed | theory | theory-missing | cv
  double lambda = 0.0;
  double delta = 0.05;
  bool shared_lambda = false;
  int cv_folds = 5;
  double cv_holdout = 0.2;
  std::vector<double> cv_grid;  // empty = default grid

  // solver
  double tol = 1e-6;
  int max_iter = 50000;

  // I/O
  std::string out_path;
  std::string report_format = "csv";  // csv | jsonl
  std::string cases_csv;
  std::string adjacency_path;
  std::string dump_trajectory;
};

// Parses the JSON object at `path` into a config for `scenario`. Unknown
// keys and type mismatches raise ConfigError.
ExperimentConfig load_config(const std::string& path, Scenario scenario);
void validate_config(const ExperimentConfig& cfg);

LambdaPolicy lambda_policy_from_config(const ExperimentConfig& cfg,
                                       std::uint64_t cv_seed);
SolverConfig solver_config_from_config(const ExperimentConfig& cfg);

// --------------------------------------------------------------------------
// Metrics and reports
// --------------------------------------------------------------------------

double l1_error(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& p_star);
double l2_error_sq(const Eigen::VectorXd& p_hat,
                   const Eigen::VectorXd& p_star);

// Linear-interpolation quantile on the finite entries; NaN when empty.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);
double mean(const std::vector<double>& values);

struct DetailRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

struct Report {
  std::vector<std::string> columns;
  std::vector<DetailRow> rows;
};

int column_index(const Report& report, const std::string& name);
std::vector<double> column_values(const Report& report,
                                  const std::string& name);

enum class ReportFormat { csv, jsonl };
ReportFormat report_format_from_string(const std::string& name);

// Detail rows plus summary_mean / summary_median / summary_q25 / summary_q75
// rows recomputed from the detail rows; byte-deterministic.
void emit_report(const Report& report, const std::string& path,
                 ReportFormat format);
// Reads back the detail rows (summary rows are recomputed, not trusted).
Report read_report(const std::string& path, ReportFormat format);

struct RunOutcome {
  Report report;
  bool solver_failure = false;  // some replicate did not converge
};

RunOutcome run_denoise_experiment(const ExperimentConfig& cfg);
RunOutcome run_forecast_experiment(const ExperimentConfig& cfg);
RunOutcome run_param_experiment(const ExperimentConfig& cfg);
RunOutcome run_missing_experiment(const ExperimentConfig& cfg);
RunOutcome run_false_positive_experiment(const ExperimentConfig& cfg);
RunOutcome run_experiment(const ExperimentConfig& cfg);  // dispatch

// Long-format view of a params report: one CSV row per (replicate, method)
// with columns replicate,seed,method,beta_hat,gamma_hat,r0_hat,residual.
void write_estimate_rows_csv(const Report& params_report,
                             const std::string& path);

// --------------------------------------------------------------------------
// County-level smoothing
// --------------------------------------------------------------------------

struct CountyData {
  Graph graph;
  std::vector<std::string> ids;
  Eigen::VectorXd population;
  Eigen::VectorXd cases;
  Eigen::VectorXd targets;       // I_c / n_c
  Eigen::VectorXd node_weights;  // n_c
  Eigen::VectorXd edge_weights;  // n_c * n_c' * w_{c,c'}

  // The returned problem references this->graph; keep the CountyData alive.
  DenoiseProblem problem(double lambda) const;
};

CountyData ingest_county_data(const std::string& cases_csv,
                              const std::string& adjacency_path);

struct CountyResult {
  std::vector<std::string> ids;
  Eigen::VectorXd population;
  Eigen::VectorXd cases;
  Eigen::VectorXd raw_prevalence;
  Eigen::VectorXd smoothed_prevalence;
  double lambda_used = 0.0;
  bool converged = true;
};

CountyResult run_county_smoothing(const ExperimentConfig& cfg);
void write_county_csv(const CountyResult& result, const std::string& path);

// Serialization of problems and results (self-describing JSON objects).
std::string problem_to_json(const DenoiseProblem& problem);
DenoiseProblem problem_from_json(const std::string& text, const Graph& g);
std::string result_to_json(const DenoiseResult& result);
DenoiseResult result_from_json(const std::string& text);

// CLI entry: epi denoise|forecast|params|missing|fp|county --config <file>.
// Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence (the
// report is still written).
int cli_main(int argc, const char* const* argv);

}  // namespace epinet
