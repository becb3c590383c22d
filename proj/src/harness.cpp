#include "epinet/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace epinet {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics and aggregation
// ---------------------------------------------------------------------------

double l1_error(const Eigen::VectorXd& p_hat, const Eigen::VectorXd& p_star) {
  if (p_hat.size() != p_star.size())
    throw std::invalid_argument("l1_error: length mismatch");
  return (p_hat - p_star).cwiseAbs().sum();
}

double l2_error_sq(const Eigen::VectorXd& p_hat,
                   const Eigen::VectorXd& p_star) {
  if (p_hat.size() != p_star.size())
    throw std::invalid_argument("l2_error_sq: length mismatch");
  return (p_hat - p_star).squaredNorm();
}

double quantile(std::vector<double> values, double q) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * q;
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

double median(std::vector<double> values) {
  return quantile(std::move(values), 0.5);
}

double mean(const std::vector<double>& values) {
  double total = 0.0;
  size_t count = 0;
  for (double v : values)
    if (std::isfinite(v)) {
      total += v;
      ++count;
    }
  return count ? total / count : kNaN;
}

int column_index(const Report& report, const std::string& name) {
  for (size_t i = 0; i < report.columns.size(); ++i)
    if (report.columns[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("report has no column named " + name);
}

std::vector<double> column_values(const Report& report,
                                  const std::string& name) {
  const int idx = column_index(report, name);
  std::vector<double> out;
  out.reserve(report.rows.size());
  for (const auto& row : report.rows) out.push_back(row.values[idx]);
  return out;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "jsonl") return ReportFormat::jsonl;
  throw ConfigError("unknown report format: " + name);
}

namespace {

struct SummaryRows {
  std::vector<double> mean_row, median_row, q25_row, q75_row;
};

SummaryRows summarize(const Report& report) {
  SummaryRows s;
  for (const auto& col : report.columns) {
    const std::vector<double> vals = column_values(report, col);
    s.mean_row.push_back(mean(vals));
    s.median_row.push_back(median(vals));
    s.q25_row.push_back(quantile(vals, 0.25));
    s.q75_row.push_back(quantile(vals, 0.75));
  }
  return s;
}

void emit_csv(const Report& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  out << "row_type,replicate,seed";
  for (const auto& col : report.columns) out << ',' << col;
  out << '\n';
  for (const auto& row : report.rows) {
    out << "detail," << row.replicate << ',' << row.seed;
    for (double v : row.values) out << ',' << format_double(v);
    out << '\n';
  }
  if (report.rows.empty()) return;  // header-only file
  const SummaryRows s = summarize(report);
  auto write_summary = [&](const char* name, const std::vector<double>& vals) {
    out << name << ",,";
    for (double v : vals) out << ',' << format_double(v);
    out << '\n';
  };
  write_summary("summary_mean", s.mean_row);
  write_summary("summary_median", s.median_row);
  write_summary("summary_q25", s.q25_row);
  write_summary("summary_q75", s.q75_row);
  if (!out) throw std::runtime_error("emit_report: write failed: " + path);
}

void emit_jsonl(const Report& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  json header;
  header["row_type"] = "header";
  header["columns"] = report.columns;
  out << header.dump() << '\n';
  auto values_of = [&](const std::vector<double>& vals) {
    json obj;
    for (size_t i = 0; i < report.columns.size(); ++i)
      obj[report.columns[i]] = vals[i];
    return obj;
  };
  for (const auto& row : report.rows) {
    json line;
    line["row_type"] = "detail";
    line["replicate"] = row.replicate;
    line["seed"] = row.seed;
    line["values"] = values_of(row.values);
    out << line.dump() << '\n';
  }
  if (report.rows.empty()) return;
  const SummaryRows s = summarize(report);
  auto write_summary = [&](const char* name, const std::vector<double>& vals) {
    json line;
    line["row_type"] = name;
    line["values"] = values_of(vals);
    out << line.dump() << '\n';
  };
  write_summary("summary_mean", s.mean_row);
  write_summary("summary_median", s.median_row);
  write_summary("summary_q25", s.q25_row);
  write_summary("summary_q75", s.q75_row);
  if (!out) throw std::runtime_error("emit_report: write failed: " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

Report read_csv_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_report: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_report: empty file " + path);
  Report report;
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "row_type")
    throw std::runtime_error("read_report: malformed header in " + path);
  report.columns.assign(header.begin() + 3, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields[0] != "detail") continue;  // summaries are recomputed
    DetailRow row;
    row.replicate = std::stoi(fields[1]);
    row.seed = std::stoull(fields[2]);
    for (size_t i = 3; i < fields.size(); ++i)
      row.values.push_back(std::strtod(fields[i].c_str(), nullptr));
    report.rows.push_back(std::move(row));
  }
  return report;
}

Report read_jsonl_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_report: cannot open " + path);
  Report report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json obj = json::parse(line);
    const std::string type = obj.at("row_type");
    if (type == "header") {
      report.columns = obj.at("columns").get<std::vector<std::string>>();
    } else if (type == "detail") {
      DetailRow row;
      row.replicate = obj.at("replicate");
      row.seed = obj.at("seed");
      const json& vals = obj.at("values");
      for (const auto& col : report.columns) {
        const json& v = vals.at(col);
        row.values.push_back(v.is_null() ? kNaN : v.get<double>());
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace

void emit_report(const Report& report, const std::string& path,
                 ReportFormat format) {
  for (const auto& row : report.rows)
    if (row.values.size() != report.columns.size())
      throw std::invalid_argument("emit_report: ragged report row");
  if (format == ReportFormat::csv)
    emit_csv(report, path);
  else
    emit_jsonl(report, path);
}

Report read_report(const std::string& path, ReportFormat format) {
  return format == ReportFormat::csv ? read_csv_report(path)
                                     : read_jsonl_report(path);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kKnownKeys = {
    "graph",      "n",          "p",           "k",
    "m",          "sizes",      "b_in",        "b_out",
    "rows",       "cols",       "edge_list",   "one_based",
    "beta",       "gamma",      "k0",          "horizon",
    "window",     "alpha",      "missing_fraction",
    "unchecked",  "replicates", "seed",        "threads",
    "lambda_policy",            "lambda",      "delta",
    "shared_lambda",            "cv_folds",    "cv_holdout",
    "cv_grid",    "tol",        "max_iter",    "out",
    "format",     "cases_csv",  "adjacency",   "dump_trajectory",
};

template <typename T>
void read_key(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path, Scenario scenario) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items())
    if (!kKnownKeys.count(item.key()))
      throw ConfigError("unknown config key: " + item.key());

  ExperimentConfig cfg;
  cfg.scenario = scenario;
  read_key(j, "graph", cfg.graph_model);
  read_key(j, "n", cfg.n);
  if (j.contains("p")) {
    const double p = j.at("p").get<double>();
    cfg.er_p = p;
    cfg.sw_p = p;
  }
  read_key(j, "k", cfg.knn_k);
  if (j.contains("m")) {
    const int m = j.at("m").get<int>();
    cfg.sw_m = m;
    cfg.pa_m = m;
  }
  read_key(j, "sizes", cfg.sbm_sizes);
  read_key(j, "b_in", cfg.sbm_p_in);
  read_key(j, "b_out", cfg.sbm_p_out);
  read_key(j, "rows", cfg.grid_rows);
  read_key(j, "cols", cfg.grid_cols);
  read_key(j, "edge_list", cfg.edge_list_path);
  read_key(j, "one_based", cfg.one_based);
  read_key(j, "beta", cfg.beta);
  read_key(j, "gamma", cfg.gamma);
  read_key(j, "k0", cfg.k0);
  read_key(j, "horizon", cfg.horizon);
  read_key(j, "window", cfg.window);
  read_key(j, "alpha", cfg.alpha);
  read_key(j, "missing_fraction", cfg.missing_fraction);
  read_key(j, "unchecked", cfg.unchecked);
  read_key(j, "replicates", cfg.replicates);
  read_key(j, "seed", cfg.seed);
  read_key(j, "threads", cfg.threads);
  read_key(j, "lambda_policy", cfg.lambda_policy);
  read_key(j, "lambda", cfg.lambda);
  read_key(j, "delta", cfg.delta);
  read_key(j, "shared_lambda", cfg.shared_lambda);
  read_key(j, "cv_folds", cfg.cv_folds);
  read_key(j, "cv_holdout", cfg.cv_holdout);
  read_key(j, "cv_grid", cfg.cv_grid);
  read_key(j, "tol", cfg.tol);
  read_key(j, "max_iter", cfg.max_iter);
  read_key(j, "out", cfg.out_path);
  read_key(j, "format", cfg.report_format);
  read_key(j, "cases_csv", cfg.cases_csv);
  read_key(j, "adjacency", cfg.adjacency_path);
  read_key(j, "dump_trajectory", cfg.dump_trajectory);
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  static const std::set<std::string> kPolicies = {"fixed", "theory",
                                                  "theory-missing", "cv"};
  if (!kPolicies.count(cfg.lambda_policy))
    fail("lambda_policy must be one of fixed|theory|theory-missing|cv");
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda))
    fail("lambda must be >= 0");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) fail("delta must be in (0,1]");
  if (!(cfg.tol > 0.0)) fail("tol must be > 0");
  if (cfg.max_iter < 1) fail("max_iter must be >= 1");
  if (cfg.cv_folds < 1) fail("cv_folds must be >= 1");
  if (!(cfg.cv_holdout > 0.0 && cfg.cv_holdout < 1.0))
    fail("cv_holdout must be in (0,1)");
  for (size_t i = 0; i < cfg.cv_grid.size(); ++i) {
    if (!(cfg.cv_grid[i] >= 0.0) || !std::isfinite(cfg.cv_grid[i]))
      fail("cv_grid entries must be >= 0");
    if (i > 0 && cfg.cv_grid[i] <= cfg.cv_grid[i - 1])
      fail("cv_grid must be strictly increasing");
  }
  report_format_from_string(cfg.report_format);

  if (cfg.scenario == Scenario::county_smooth) {
    if (cfg.cases_csv.empty()) fail("county: cases_csv is required");
    if (cfg.adjacency_path.empty()) fail("county: adjacency is required");
    return;
  }

  static const std::set<std::string> kModels = {
      "erdos_renyi", "knn",    "small_world", "preferential_attachment",
      "sbm",         "grid2d", "star",        "complete",
      "edge_list"};
  if (!kModels.count(cfg.graph_model))
    fail("unknown graph model: " + cfg.graph_model);
  if (cfg.graph_model == "edge_list" && cfg.edge_list_path.empty())
    fail("edge_list graph requires the edge_list key");
  if (cfg.graph_model != "edge_list" && cfg.n < 2) fail("n must be >= 2");
  if (cfg.graph_model == "erdos_renyi" &&
      !(cfg.er_p >= 0.0 && cfg.er_p <= 1.0))
    fail("erdos_renyi: p must be in [0,1]");
  if (cfg.graph_model == "knn" && !(cfg.knn_k >= 1 && cfg.knn_k < cfg.n))
    fail("knn: requires 1 <= k < n");
  if (cfg.graph_model == "small_world") {
    if (cfg.sw_m < 2 || cfg.sw_m % 2 != 0 || cfg.sw_m >= cfg.n)
      fail("small_world: m must be even with 2 <= m < n");
    if (!(cfg.sw_p >= 0.0 && cfg.sw_p <= 1.0))
      fail("small_world: p must be in [0,1]");
  }
  if (cfg.graph_model == "preferential_attachment" &&
      !(cfg.pa_m >= 1 && cfg.pa_m < cfg.n))
    fail("preferential_attachment: requires 1 <= m < n");
  if (cfg.graph_model == "sbm") {
    int total = 0;
    for (int s : cfg.sbm_sizes) total += s;
    if (cfg.sbm_sizes.empty() || total != cfg.n)
      fail("sbm: sizes must be nonempty and sum to n");
    for (double b : {cfg.sbm_p_in, cfg.sbm_p_out})
      if (!(b >= 0.0 && b <= 1.0)) fail("sbm: b_in/b_out must be in [0,1]");
  }
  if (cfg.graph_model == "grid2d" && cfg.grid_rows * cfg.grid_cols != cfg.n)
    fail("grid2d: rows * cols must equal n");
  if (cfg.replicates < 1) fail("replicates must be >= 1");
  if (!(cfg.beta >= 0.0 && cfg.beta < 1.0)) fail("beta must be in [0,1)");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) fail("gamma must be in (0,1)");
  if (cfg.k0 < 0) fail("k0 must be >= 0");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) fail("alpha must be in [0,1)");
  if (cfg.scenario == Scenario::forecast && cfg.horizon < 0)
    fail("horizon must be >= 0");
  if (cfg.scenario == Scenario::params && cfg.window < 2)
    fail("params: window must be >= 2 snapshots");
  if (cfg.scenario == Scenario::missing &&
      !(cfg.missing_fraction >= 0.0 && cfg.missing_fraction < 1.0))
    fail("missing_fraction must be in [0,1): no observed nodes otherwise");
}

LambdaPolicy lambda_policy_from_config(const ExperimentConfig& cfg,
                                       std::uint64_t cv_seed) {
  LambdaPolicy policy;
  if (cfg.lambda_policy == "fixed")
    policy.kind = LambdaPolicy::Kind::fixed;
  else if (cfg.lambda_policy == "theory")
    policy.kind = LambdaPolicy::Kind::theory;
  else if (cfg.lambda_policy == "theory-missing")
    policy.kind = LambdaPolicy::Kind::theory_missing;
  else
    policy.kind = LambdaPolicy::Kind::cv;
  policy.lambda = cfg.lambda;
  policy.delta = cfg.delta;
  policy.cv.folds = cfg.cv_folds;
  policy.cv.holdout_fraction = cfg.cv_holdout;
  if (!cfg.cv_grid.empty()) policy.cv.lambda_grid = cfg.cv_grid;
  policy.cv.seed = cv_seed;
  return policy;
}

SolverConfig solver_config_from_config(const ExperimentConfig& cfg) {
  SolverConfig scfg;
  scfg.tol_primal = cfg.tol;
  scfg.tol_dual = cfg.tol;
  scfg.max_iter = cfg.max_iter;
  return scfg;
}

// ---------------------------------------------------------------------------
// Replicate engine
// ---------------------------------------------------------------------------

namespace {

GraphModel graph_model_from_config(const ExperimentConfig& cfg) {
  if (cfg.graph_model == "erdos_renyi") return ErdosRenyi{cfg.er_p};
  if (cfg.graph_model == "knn") return Knn{cfg.knn_k};
  if (cfg.graph_model == "small_world") return SmallWorld{cfg.sw_m, cfg.sw_p};
  if (cfg.graph_model == "preferential_attachment")
    return PreferentialAttachment{cfg.pa_m};
  if (cfg.graph_model == "sbm") {
    const int blocks = static_cast<int>(cfg.sbm_sizes.size());
    Eigen::MatrixXd b =
        Eigen::MatrixXd::Constant(blocks, blocks, cfg.sbm_p_out);
    b.diagonal().setConstant(cfg.sbm_p_in);
    return Sbm{cfg.sbm_sizes, b};
  }
  if (cfg.graph_model == "grid2d") return Grid2d{cfg.grid_rows, cfg.grid_cols};
  if (cfg.graph_model == "star") return Star{};
  if (cfg.graph_model == "complete") return Complete{};
  throw ConfigError("unknown graph model: " + cfg.graph_model);
}

struct ReplicateSim {
  Graph contact;  // weighted
  EpidemicParams params;
  std::vector<Eigen::VectorXd> trajectory;
};

// Per-replicate stream ids (children of the replicate stream).
constexpr std::uint64_t kGraphStream = 0;
constexpr std::uint64_t kPatientZeroStream = 1;
constexpr std::uint64_t kObservationStream = 2;
constexpr std::uint64_t kCvStream = 3;
constexpr std::uint64_t kMaskStream = 4;

ReplicateSim simulate_replicate(const ExperimentConfig& cfg, const Rng& rr,
                                int steps, const Graph* preloaded) {
  ReplicateSim sim;
  if (preloaded != nullptr) {
    sim.contact =
        preloaded->weighted() ? *preloaded : contact_weights(*preloaded);
  } else {
    const Graph base = generate_graph(graph_model_from_config(cfg), cfg.n,
                                      rr.derive_seed(kGraphStream));
    sim.contact = contact_weights(base);
  }
  sim.params = make_params(sim.contact, cfg.beta, cfg.gamma,
                           /*checked=*/!cfg.unchecked);
  Rng zero_rng = rr.derive(kPatientZeroStream);
  const Eigen::VectorXd p0 = random_patient_zero(sim.contact.n, zero_rng);
  sim.trajectory = simulate(p0, sim.params, steps);
  return sim;
}

// Runs `body(replicate, shared_lambda_slot)` over all replicates on a
// bounded pool. With shared_lambda the first replicate runs alone so later
// ones can reuse its regularization weight. Rows land at their replicate
// index, so scheduling never changes the report.
RunOutcome run_rows(
    const ExperimentConfig& cfg, std::vector<std::string> columns,
    const std::function<std::pair<std::vector<double>, bool>(
        int, std::optional<double>&)>& body) {
  RunOutcome outcome;
  outcome.report.columns = std::move(columns);
  outcome.report.rows.resize(cfg.replicates);

  const Rng root(cfg.seed);
  std::optional<double> shared_lambda;
  std::atomic<bool> failure{false};

  auto run_one = [&](int rep) {
    auto [values, ok] = body(rep, shared_lambda);
    DetailRow& row = outcome.report.rows[rep];
    row.replicate = rep;
    row.seed = root.derive_seed(rep);
    row.values = std::move(values);
    if (!ok) failure.store(true);
  };

  int start = 0;
  if (cfg.shared_lambda && cfg.replicates > 0) {
    run_one(0);
    start = 1;
  }
  const int remaining = cfg.replicates - start;
  int threads = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, remaining));
  if (remaining > 0) {
    if (threads == 1) {
      for (int rep = start; rep < cfg.replicates; ++rep) run_one(rep);
    } else {
      std::atomic<int> next{start};
      std::mutex error_mutex;
      std::exception_ptr first_error;
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
          while (true) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.replicates) break;
            try {
              run_one(rep);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      for (auto& th : pool) th.join();
      if (first_error) std::rethrow_exception(first_error);
    }
  }
  outcome.solver_failure = failure.load();
  return outcome;
}

double resolve_replicate_lambda(const ExperimentConfig& cfg, const Rng& rr,
                                const Eigen::VectorXd& y,
                                const std::optional<Eigen::VectorXd>& mask,
                                const Graph& g, const SolverConfig& scfg,
                                std::optional<double>& shared, int rep) {
  if (shared) return *shared;
  const LambdaPolicy policy =
      lambda_policy_from_config(cfg, rr.derive_seed(kCvStream));
  const double lambda = resolve_lambda(policy, y, mask, g, scfg);
  if (cfg.shared_lambda && rep == 0) shared = lambda;
  return lambda;
}

double r0_or_nan(const ParamEstimate& est) {
  return est.r0_hat ? *est.r0_hat : kNaN;
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

RunOutcome run_denoise_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SolverConfig scfg = solver_config_from_config(cfg);
  std::optional<Graph> preloaded;
  if (cfg.graph_model == "edge_list")
    preloaded = load_edge_list(cfg.edge_list_path, cfg.one_based);
  const Rng root(cfg.seed);

  return run_rows(
      cfg,
      {"lambda", "epidemic_size", "l1_tv", "l2sq_tv", "l1_naive", "l2sq_naive",
       "iterations", "converged"},
      [&](int rep, std::optional<double>& shared) {
        const Rng rr = root.derive(rep);
        const ReplicateSim sim = simulate_replicate(
            cfg, rr, cfg.k0, preloaded ? &*preloaded : nullptr);
        const Eigen::VectorXd& p_star = sim.trajectory.back();
        const Eigen::VectorXd y = sample_observations(
            p_star, cfg.alpha, rr.derive_seed(kObservationStream));
        const double lambda = resolve_replicate_lambda(
            cfg, rr, y, std::nullopt, sim.contact, scfg, shared, rep);
        const DenoiseResult res = tv_denoise(y, sim.contact, lambda, scfg);
        if (rep == 0 && !cfg.dump_trajectory.empty())
          write_trajectory_csv(sim.trajectory, cfg.dump_trajectory);
        return std::make_pair(
            std::vector<double>{lambda, p_star.sum(),
                                l1_error(res.p_hat, p_star),
                                l2_error_sq(res.p_hat, p_star),
                                l1_error(y, p_star), l2_error_sq(y, p_star),
                                static_cast<double>(res.iterations),
                                res.converged ? 1.0 : 0.0},
            res.converged);
      });
}

RunOutcome run_forecast_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SolverConfig scfg = solver_config_from_config(cfg);
  std::optional<Graph> preloaded;
  if (cfg.graph_model == "edge_list")
    preloaded = load_edge_list(cfg.edge_list_path, cfg.one_based);
  const Rng root(cfg.seed);

  return run_rows(
      cfg,
      {"lambda", "epidemic_size", "l1_tv", "l1_naive", "l2sq_fc_tv",
       "l2sq_fc_naive", "converged"},
      [&](int rep, std::optional<double>& shared) {
        const Rng rr = root.derive(rep);
        const ReplicateSim sim = simulate_replicate(
            cfg, rr, cfg.k0 + cfg.horizon, preloaded ? &*preloaded : nullptr);
        const Eigen::VectorXd& p_star = sim.trajectory[cfg.k0];
        const Eigen::VectorXd& p_future = sim.trajectory.back();
        const Eigen::VectorXd y = sample_observations(
            p_star, cfg.alpha, rr.derive_seed(kObservationStream));
        const double lambda = resolve_replicate_lambda(
            cfg, rr, y, std::nullopt, sim.contact, scfg, shared, rep);
        const DenoiseResult res = tv_denoise(y, sim.contact, lambda, scfg);
        const Eigen::VectorXd fc_tv =
            forecast(res.p_hat, sim.params, cfg.horizon);
        const Eigen::VectorXd fc_naive = forecast(y, sim.params, cfg.horizon);
        return std::make_pair(
            std::vector<double>{lambda, p_star.sum(),
                                l1_error(res.p_hat, p_star),
                                l1_error(y, p_star),
                                l2_error_sq(fc_tv, p_future),
                                l2_error_sq(fc_naive, p_future),
                                res.converged ? 1.0 : 0.0},
            res.converged);
      });
}

RunOutcome run_param_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SolverConfig scfg = solver_config_from_config(cfg);
  std::optional<Graph> preloaded;
  if (cfg.graph_model == "edge_list")
    preloaded = load_edge_list(cfg.edge_list_path, cfg.one_based);
  const Rng root(cfg.seed);

  return run_rows(
      cfg,
      {"lambda", "epidemic_size", "beta_tv", "gamma_tv", "r0_tv", "beta_naive",
       "gamma_naive", "r0_naive", "residual_tv", "residual_naive",
       "converged"},
      [&](int rep, std::optional<double>& shared) {
        const Rng rr = root.derive(rep);
        // The epidemic is watched from step k0 on: simulate through the
        // observation window and snapshot each of its `window` steps.
        const int last = cfg.k0 + cfg.window - 1;
        const ReplicateSim sim = simulate_replicate(
            cfg, rr, last, preloaded ? &*preloaded : nullptr);
        const int first = cfg.k0;
        const Rng obs_rng = rr.derive(kObservationStream);
        std::vector<ObservationSet> observations;
        for (int t = first; t <= last; ++t) {
          ObservationSet obs;
          obs.seed = obs_rng.derive_seed(t);
          obs.y = sample_observations(sim.trajectory[t], cfg.alpha, obs.seed);
          obs.mask = Eigen::VectorXd::Ones(sim.contact.n);
          obs.alpha = cfg.alpha;
          obs.pi = Eigen::VectorXd::Ones(sim.contact.n);
          observations.push_back(std::move(obs));
        }
        LambdaPolicy policy =
            lambda_policy_from_config(cfg, rr.derive_seed(kCvStream));
        if (shared) {
          policy.kind = LambdaPolicy::Kind::fixed;
          policy.lambda = *shared;
        }
        const ObservationEstimate est = estimate_params_from_observations(
            observations, sim.contact, sim.params.omega, policy, scfg);
        if (cfg.shared_lambda && rep == 0) shared = est.lambda_used;
        return std::make_pair(
            std::vector<double>{est.lambda_used,
                                sim.trajectory[cfg.k0].sum(),
                                est.tv.beta_hat, est.tv.gamma_hat,
                                r0_or_nan(est.tv), est.naive.beta_hat,
                                est.naive.gamma_hat, r0_or_nan(est.naive),
                                est.tv.residual_norm,
                                est.naive.residual_norm,
                                est.all_converged ? 1.0 : 0.0},
            est.all_converged);
      });
}

RunOutcome run_missing_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SolverConfig scfg = solver_config_from_config(cfg);
  std::optional<Graph> preloaded;
  if (cfg.graph_model == "edge_list")
    preloaded = load_edge_list(cfg.edge_list_path, cfg.one_based);
  const Rng root(cfg.seed);

  return run_rows(
      cfg,
      {"lambda", "missing_fraction", "epidemic_size", "l1_tv", "l1_naive",
       "converged"},
      [&](int rep, std::optional<double>& shared) {
        const Rng rr = root.derive(rep);
        const ReplicateSim sim = simulate_replicate(
            cfg, rr, cfg.k0, preloaded ? &*preloaded : nullptr);
        const Eigen::VectorXd& p_star = sim.trajectory.back();
        const Eigen::VectorXd y = sample_observations(
            p_star, cfg.alpha, rr.derive_seed(kObservationStream));
        const Eigen::VectorXd pi = Eigen::VectorXd::Constant(
            sim.contact.n, 1.0 - cfg.missing_fraction);
        const Eigen::VectorXd mask =
            sample_mask(pi, rr.derive_seed(kMaskStream));
        const Eigen::VectorXd y_tilde = mask.cwiseProduct(y);
        const double lambda = resolve_replicate_lambda(
            cfg, rr, y_tilde, mask, sim.contact, scfg, shared, rep);
        const DenoiseResult res =
            tv_denoise_masked(y_tilde, mask, sim.contact, lambda, scfg);
        return std::make_pair(
            std::vector<double>{lambda, cfg.missing_fraction, p_star.sum(),
                                l1_error(res.p_hat, p_star),
                                l1_error(y_tilde, p_star),
                                res.converged ? 1.0 : 0.0},
            res.converged);
      });
}

RunOutcome run_false_positive_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const SolverConfig scfg = solver_config_from_config(cfg);
  std::optional<Graph> preloaded;
  if (cfg.graph_model == "edge_list")
    preloaded = load_edge_list(cfg.edge_list_path, cfg.one_based);
  const Rng root(cfg.seed);

  return run_rows(
      cfg,
      {"lambda", "alpha", "epidemic_size", "l1_tv_corrected", "l1_tv_raw",
       "l1_naive", "converged"},
      [&](int rep, std::optional<double>& shared) {
        const Rng rr = root.derive(rep);
        const ReplicateSim sim = simulate_replicate(
            cfg, rr, cfg.k0, preloaded ? &*preloaded : nullptr);
        const Eigen::VectorXd& p_star = sim.trajectory.back();
        const Eigen::VectorXd y = sample_observations(
            p_star, cfg.alpha, rr.derive_seed(kObservationStream));
        const double lambda = resolve_replicate_lambda(
            cfg, rr, y, std::nullopt, sim.contact, scfg, shared, rep);
        const DenoiseResult res = tv_denoise(y, sim.contact, lambda, scfg);
        const Eigen::VectorXd corrected =
            correct_false_positives(res.p_hat, cfg.alpha);
        return std::make_pair(
            std::vector<double>{lambda, cfg.alpha, p_star.sum(),
                                l1_error(corrected, p_star),
                                l1_error(res.p_hat, p_star),
                                l1_error(y, p_star),
                                res.converged ? 1.0 : 0.0},
            res.converged);
      });
}

void write_estimate_rows_csv(const Report& params_report,
                             const std::string& path) {
  const int beta_tv = column_index(params_report, "beta_tv");
  const int gamma_tv = column_index(params_report, "gamma_tv");
  const int r0_tv = column_index(params_report, "r0_tv");
  const int beta_nv = column_index(params_report, "beta_naive");
  const int gamma_nv = column_index(params_report, "gamma_naive");
  const int r0_nv = column_index(params_report, "r0_naive");
  const int res_tv = column_index(params_report, "residual_tv");
  const int res_nv = column_index(params_report, "residual_naive");
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_estimate_rows_csv: cannot open " + path);
  out << "replicate,seed,method,beta_hat,gamma_hat,r0_hat,residual\n";
  for (const auto& row : params_report.rows) {
    out << row.replicate << ',' << row.seed << ",tv,"
        << format_double(row.values[beta_tv]) << ','
        << format_double(row.values[gamma_tv]) << ','
        << format_double(row.values[r0_tv]) << ','
        << format_double(row.values[res_tv]) << '\n';
    out << row.replicate << ',' << row.seed << ",naive,"
        << format_double(row.values[beta_nv]) << ','
        << format_double(row.values[gamma_nv]) << ','
        << format_double(row.values[r0_nv]) << ','
        << format_double(row.values[res_nv]) << '\n';
  }
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::denoise:
      return run_denoise_experiment(cfg);
    case Scenario::forecast:
      return run_forecast_experiment(cfg);
    case Scenario::params:
      return run_param_experiment(cfg);
    case Scenario::missing:
      return run_missing_experiment(cfg);
    case Scenario::false_positive:
      return run_false_positive_experiment(cfg);
    case Scenario::county_smooth:
      throw std::logic_error(
          "run_experiment: county smoothing has a dedicated entry point");
  }
  throw std::logic_error("run_experiment: unknown scenario");
}

// ---------------------------------------------------------------------------
// County-level smoothing
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::string cleaned = line;
  for (char& c : cleaned)
    if (c == ',' || c == '\t') c = ' ';
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool parse_number(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != nullptr && *end == '\0' && !s.empty();
}

}  // namespace

DenoiseProblem CountyData::problem(double lambda) const {
  DenoiseProblem pr;
  pr.targets = targets;
  pr.node_weights = node_weights;
  pr.edge_weights = edge_weights;
  pr.lambda = lambda;
  pr.graph = &graph;
  return pr;
}

CountyData ingest_county_data(const std::string& cases_csv,
                              const std::string& adjacency_path) {
  std::ifstream in(cases_csv);
  if (!in)
    throw std::runtime_error("ingest_county_data: cannot open " + cases_csv);
  CountyData data;
  std::map<std::string, int> index;
  std::vector<double> pops, cases;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 3)
      throw std::runtime_error("ingest_county_data: expected 3 columns at " +
                               cases_csv + ":" + std::to_string(line_no));
    double pop = 0.0, count = 0.0;
    if (!parse_number(fields[1], pop) || !parse_number(fields[2], count)) {
      if (line_no == 1) continue;  // header row
      throw std::runtime_error("ingest_county_data: bad number at " +
                               cases_csv + ":" + std::to_string(line_no));
    }
    const std::string& id = fields[0];
    if (index.count(id))
      throw std::runtime_error("ingest_county_data: duplicate county id " +
                               id);
    if (!(pop > 0.0))
      throw std::runtime_error("ingest_county_data: nonpositive population "
                               "for county " + id);
    if (count < 0.0 || count > pop)
      throw std::runtime_error(
          "ingest_county_data: cases outside [0, population] for county " +
          id);
    index[id] = static_cast<int>(data.ids.size());
    data.ids.push_back(id);
    pops.push_back(pop);
    cases.push_back(count);
  }
  const int n = static_cast<int>(data.ids.size());
  if (n == 0) throw std::runtime_error("ingest_county_data: no counties");

  data.graph.n = n;
  std::ifstream adj(adjacency_path);
  if (!adj)
    throw std::runtime_error("ingest_county_data: cannot open " +
                             adjacency_path);
  std::set<Edge> edges;
  line_no = 0;
  while (std::getline(adj, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto fields =
        split_fields(hash == std::string::npos ? line : line.substr(0, hash));
    if (fields.empty()) continue;
    if (fields.size() != 2)
      throw std::runtime_error("ingest_county_data: expected 2 ids at " +
                               adjacency_path + ":" + std::to_string(line_no));
    for (const auto& id : {fields[0], fields[1]})
      if (!index.count(id))
        throw std::runtime_error("ingest_county_data: unknown county id " +
                                 id + " at " + adjacency_path + ":" +
                                 std::to_string(line_no));
    const int u = index[fields[0]];
    const int v = index[fields[1]];
    if (u == v)
      throw std::runtime_error("ingest_county_data: county adjacent to "
                               "itself at " + adjacency_path + ":" +
                               std::to_string(line_no));
    edges.insert({std::min(u, v), std::max(u, v)});
  }
  data.graph.edges.assign(edges.begin(), edges.end());

  data.population = Eigen::Map<Eigen::VectorXd>(pops.data(), n);
  data.cases = Eigen::Map<Eigen::VectorXd>(cases.data(), n);
  data.targets = data.cases.cwiseQuotient(data.population);
  data.node_weights = data.population;

  // Edge weight n_c n_c' w_{c,c'} with w symmetrized through the larger
  // neighbourhood population: w = 1 / max(N(c), N(c')), N(c) the total
  // population adjacent to c.
  Eigen::VectorXd neighbour_pop = Eigen::VectorXd::Zero(n);
  for (const auto& [u, v] : data.graph.edges) {
    neighbour_pop[u] += data.population[v];
    neighbour_pop[v] += data.population[u];
  }
  data.edge_weights.resize(data.graph.num_edges());
  for (int e = 0; e < data.graph.num_edges(); ++e) {
    const auto& [u, v] = data.graph.edges[e];
    const double w = 1.0 / std::max(neighbour_pop[u], neighbour_pop[v]);
    data.edge_weights[e] = data.population[u] * data.population[v] * w;
  }
  return data;
}

CountyResult run_county_smoothing(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const CountyData data =
      ingest_county_data(cfg.cases_csv, cfg.adjacency_path);
  const SolverConfig scfg = solver_config_from_config(cfg);

  double lambda = cfg.lambda;
  if (cfg.lambda_policy == "cv") {
    CvConfig cv;
    cv.folds = cfg.cv_folds;
    cv.holdout_fraction = cfg.cv_holdout;
    if (!cfg.cv_grid.empty()) cv.lambda_grid = cfg.cv_grid;
    cv.seed = Rng(cfg.seed).derive_seed(kCvStream);
    lambda = cross_validate_lambda_weighted(data.problem(0.0), cv, scfg)
                 .lambda_star;
  } else if (cfg.lambda_policy == "theory") {
    lambda = theoretical_lambda(
        data.graph.n, inverse_scaling_factor(data.graph, RhoMode::bound),
        cfg.delta);
  } else if (cfg.lambda_policy == "theory-missing") {
    lambda = theoretical_lambda_missing(
        data.graph.n, inverse_scaling_factor(data.graph, RhoMode::bound));
  }

  const DenoiseResult res = tv_denoise_weighted(data.problem(lambda), scfg);
  CountyResult result;
  result.ids = data.ids;
  result.population = data.population;
  result.cases = data.cases;
  result.raw_prevalence = data.targets;
  result.smoothed_prevalence = res.p_hat;
  result.lambda_used = lambda;
  result.converged = res.converged;
  return result;
}

void write_county_csv(const CountyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_county_csv: cannot open " + path);
  out << "county_id,population,cases,raw_prevalence,smoothed_prevalence\n";
  for (size_t i = 0; i < result.ids.size(); ++i) {
    out << result.ids[i] << ',' << format_double(result.population[i]) << ','
        << format_double(result.cases[i]) << ','
        << format_double(result.raw_prevalence[i]) << ','
        << format_double(result.smoothed_prevalence[i]) << '\n';
  }
  if (!out)
    throw std::runtime_error("write_county_csv: write failed: " + path);
}

// ---------------------------------------------------------------------------
// Problem / result serialization
// ---------------------------------------------------------------------------

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i];
  return v;
}

}  // namespace

std::string problem_to_json(const DenoiseProblem& problem) {
  json j;
  j["n"] = problem.graph ? problem.graph->n : 0;
  j["m"] = problem.graph ? problem.graph->num_edges() : 0;
  j["targets"] = vector_to_json(problem.targets);
  j["node_weights"] = vector_to_json(problem.node_weights);
  j["edge_weights"] = vector_to_json(problem.edge_weights);
  j["lambda"] = problem.lambda;
  return j.dump();
}

DenoiseProblem problem_from_json(const std::string& text, const Graph& g) {
  const json j = json::parse(text);
  if (j.at("n").get<int>() != g.n ||
      j.at("m").get<int>() != g.num_edges())
    throw std::invalid_argument(
        "problem_from_json: graph shape does not match serialized problem");
  DenoiseProblem pr;
  pr.targets = vector_from_json(j.at("targets"));
  pr.node_weights = vector_from_json(j.at("node_weights"));
  pr.edge_weights = vector_from_json(j.at("edge_weights"));
  pr.lambda = j.at("lambda");
  pr.graph = &g;
  return pr;
}

std::string result_to_json(const DenoiseResult& result) {
  json j;
  j["p_hat"] = vector_to_json(result.p_hat);
  j["objective"] = result.objective;
  j["iterations"] = result.iterations;
  j["primal_residual"] = result.primal_residual;
  j["dual_residual"] = result.dual_residual;
  j["converged"] = result.converged;
  j["lambda_used"] = result.lambda_used;
  return j.dump();
}

DenoiseResult result_from_json(const std::string& text) {
  const json j = json::parse(text);
  DenoiseResult res;
  res.p_hat = vector_from_json(j.at("p_hat"));
  res.objective = j.at("objective");
  res.iterations = j.at("iterations");
  res.primal_residual = j.at("primal_residual");
  res.dual_residual = j.at("dual_residual");
  res.converged = j.at("converged");
  res.lambda_used = j.at("lambda_used");
  return res;
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

std::string default_out_path(Scenario scenario, const std::string& format) {
  std::string stem;
  switch (scenario) {
    case Scenario::denoise: stem = "denoise"; break;
    case Scenario::forecast: stem = "forecast"; break;
    case Scenario::params: stem = "params"; break;
    case Scenario::missing: stem = "missing"; break;
    case Scenario::false_positive: stem = "fp"; break;
    case Scenario::county_smooth: stem = "county"; break;
  }
  return stem + "_report." + (format == "jsonl" ? "jsonl" : "csv");
}

void print_report_summary(const Report& report, std::ostream& os) {
  for (const auto& col : report.columns) {
    const auto vals = column_values(report, col);
    os << "  " << col << ": median=" << median(vals)
       << " iqr=[" << quantile(vals, 0.25) << ", " << quantile(vals, 0.75)
       << "] mean=" << mean(vals) << '\n';
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"one-bit TV denoising and epidemic nowcasting over networks"};
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::string out;
    std::string format;
    std::string lambda_policy;
    double lambda = 0.0, delta = 0.0, alpha = 0.0, tol = 0.0;
    int replicates = 0, max_iter = 0, threads = 0;
    std::uint64_t seed = 0;
    bool shared_lambda = false, one_based = false, unchecked = false;
  };
  Options opt;

  const std::vector<std::pair<std::string, Scenario>> subcommands = {
      {"denoise", Scenario::denoise},
      {"forecast", Scenario::forecast},
      {"params", Scenario::params},
      {"missing", Scenario::missing},
      {"fp", Scenario::false_positive},
      {"county", Scenario::county_smooth},
  };
  std::map<std::string, CLI::App*> apps;
  for (const auto& [name, scenario] : subcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", opt.seed, "root RNG seed");
    sub->add_option("--replicates", opt.replicates, "number of replicates");
    sub->add_option("--out", opt.out, "report output path");
    sub->add_option("--format", opt.format, "report format: csv|jsonl");
    sub->add_option("--lambda", opt.lambda, "fixed regularization weight");
    sub->add_option("--lambda-policy", opt.lambda_policy,
                    "fixed|theory|theory-missing|cv");
    sub->add_option("--delta", opt.delta, "theory-policy confidence level");
    sub->add_option("--alpha", opt.alpha, "false-positive rate");
    sub->add_option("--tol", opt.tol, "solver residual tolerance");
    sub->add_option("--max-iter", opt.max_iter, "solver iteration cap");
    sub->add_option("--threads", opt.threads, "worker pool size");
    sub->add_flag("--shared-lambda", opt.shared_lambda,
                  "fit lambda once on the first replicate");
    sub->add_flag("--one-based", opt.one_based,
                  "edge lists use 1-based node ids");
    sub->add_flag("--unchecked", opt.unchecked,
                  "skip the epidemic well-posedness hard error");
    apps[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Scenario scenario = Scenario::denoise;
  CLI::App* active = nullptr;
  for (const auto& [name, sc] : subcommands)
    if (apps[name]->parsed()) {
      scenario = sc;
      active = apps[name];
    }

  try {
    ExperimentConfig cfg = load_config(opt.config, scenario);
    auto given = [&](const std::string& flag) {
      return active->count(flag) > 0;
    };
    if (given("--seed")) cfg.seed = opt.seed;
    if (given("--replicates")) cfg.replicates = opt.replicates;
    if (given("--out")) cfg.out_path = opt.out;
    if (given("--format")) cfg.report_format = opt.format;
    if (given("--lambda")) {
      cfg.lambda = opt.lambda;
      if (!given("--lambda-policy")) cfg.lambda_policy = "fixed";
    }
    if (given("--lambda-policy")) cfg.lambda_policy = opt.lambda_policy;
    if (given("--delta")) cfg.delta = opt.delta;
    if (given("--alpha")) cfg.alpha = opt.alpha;
    if (given("--tol")) cfg.tol = opt.tol;
    if (given("--max-iter")) cfg.max_iter = opt.max_iter;
    if (given("--threads")) cfg.threads = opt.threads;
    if (given("--shared-lambda")) cfg.shared_lambda = opt.shared_lambda;
    if (given("--one-based")) cfg.one_based = opt.one_based;
    if (given("--unchecked")) cfg.unchecked = opt.unchecked;
    validate_config(cfg);

    const std::string out_path =
        cfg.out_path.empty() ? default_out_path(scenario, cfg.report_format)
                             : cfg.out_path;

    if (scenario == Scenario::county_smooth) {
      const CountyResult result = run_county_smoothing(cfg);
      write_county_csv(result, out_path);
      std::cout << "county smoothing: " << result.ids.size()
                << " counties, lambda=" << result.lambda_used << " -> "
                << out_path << '\n';
      return result.converged ? 0 : 3;
    }

    const RunOutcome outcome = run_experiment(cfg);
    emit_report(outcome.report, out_path,
                report_format_from_string(cfg.report_format));
    if (scenario == Scenario::params) {
      const auto dot = out_path.find_last_of('.');
      const std::string stem =
          dot == std::string::npos ? out_path : out_path.substr(0, dot);
      write_estimate_rows_csv(outcome.report, stem + "_estimates.csv");
    }
    std::cout << "wrote " << outcome.report.rows.size() << " replicates to "
              << out_path << '\n';
    print_report_summary(outcome.report, std::cout);
    if (outcome.solver_failure) {
      std::cerr << "warning: at least one replicate did not converge\n";
      return 3;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace epinet
