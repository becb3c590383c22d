#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "epinet/harness.hpp"

using namespace epinet;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

ExperimentConfig tiny_config(Scenario scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.graph_model = "knn";
  cfg.n = 40;
  cfg.knn_k = 3;
  cfg.beta = 0.4;
  cfg.gamma = 0.2;
  cfg.k0 = 5;
  cfg.window = 4;
  cfg.replicates = 3;
  cfg.seed = 7;
  cfg.threads = 1;
  cfg.lambda_policy = "fixed";
  cfg.lambda = 0.02;
  cfg.tol = 1e-7;
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("error metrics") {
  Eigen::VectorXd a(2), b(2);
  a << 0.5, 0.5;
  b << 0.5, 0.5;
  CHECK(l1_error(a, b) == 0.0);
  CHECK(l2_error_sq(a, b) == 0.0);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(l1_error(zero, a) == doctest::Approx(1.0));
  CHECK(l2_error_sq(zero, a) == doctest::Approx(0.5));

  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x(6), y(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.uniform();
    }
    CHECK(l2_error_sq(x, y) <= l1_error(x, y) + 1e-12);
  }
  CHECK_THROWS(l1_error(a, zero.head(1)));
}

TEST_CASE("quantiles") {
  CHECK(median({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
  CHECK(median({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(2.5));
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == doctest::Approx(2.0));
  CHECK(mean({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
  // non-finite entries are ignored
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(median({1.0, nan, 3.0}) == doctest::Approx(2.0));
  CHECK(std::isnan(median({})));
}

TEST_CASE("report emission") {
  Report report;
  report.columns = {"x", "y"};

  SUBCASE("empty report writes a header-only file") {
    TempFile tmp("epinet_test_empty.csv");
    emit_report(report, tmp.path, ReportFormat::csv);
    CHECK(slurp(tmp.path) == "row_type,replicate,seed,x,y\n");
  }

  SUBCASE("round trip reproduces the emitted bytes") {
    report.rows.push_back({0, 11u, {0.125, 3.0}});
    report.rows.push_back({1, 12u, {1.0 / 3.0, -2.5}});
    report.rows.push_back({2, 13u, {0.77, 1e-17}});
    for (ReportFormat fmt : {ReportFormat::csv, ReportFormat::jsonl}) {
      TempFile tmp(fmt == ReportFormat::csv ? "epinet_test_rt.csv"
                                            : "epinet_test_rt.jsonl");
      emit_report(report, tmp.path, fmt);
      const std::string first = slurp(tmp.path);
      const Report back = read_report(tmp.path, fmt);
      CHECK(back.columns == report.columns);
      REQUIRE(back.rows.size() == report.rows.size());
      for (size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].replicate == report.rows[i].replicate);
        CHECK(back.rows[i].seed == report.rows[i].seed);
        for (size_t v = 0; v < back.rows[i].values.size(); ++v)
          CHECK(back.rows[i].values[v] == report.rows[i].values[v]);
      }
      emit_report(back, tmp.path, fmt);
      CHECK(slurp(tmp.path) == first);
    }
  }

  SUBCASE("summary rows match recomputation from detail rows") {
    report.rows.push_back({0, 1u, {1.0, 10.0}});
    report.rows.push_back({1, 2u, {2.0, 20.0}});
    report.rows.push_back({2, 3u, {4.0, 50.0}});
    TempFile tmp("epinet_test_sum.csv");
    emit_report(report, tmp.path, ReportFormat::csv);
    std::ifstream in(tmp.path);
    std::string line, median_line;
    while (std::getline(in, line))
      if (line.rfind("summary_median", 0) == 0) median_line = line;
    REQUIRE(!median_line.empty());
    std::ostringstream expected;
    expected << "summary_median,,," << median(column_values(report, "x"))
             << ",";
    CHECK(median_line.substr(0, 17) == "summary_median,,,");
    // parse back and compare numerically
    const auto pos = median_line.rfind(',');
    CHECK(std::strtod(median_line.c_str() + 17, nullptr) ==
          doctest::Approx(median(column_values(report, "x"))));
    CHECK(std::strtod(median_line.c_str() + pos + 1, nullptr) ==
          doctest::Approx(median(column_values(report, "y"))));
  }
}

TEST_CASE("config loading") {
  TempFile tmp("epinet_test_cfg.json");

  SUBCASE("valid config parses with overridden fields") {
    spit(tmp.path,
         R"({"graph":"knn","n":100,"k":4,"beta":0.3,"gamma":0.15,)"
         R"("k0":8,"replicates":5,"seed":42,"lambda_policy":"cv",)"
         R"("cv_grid":[0.0,0.01,0.1],"tol":1e-6})");
    const ExperimentConfig cfg = load_config(tmp.path, Scenario::denoise);
    CHECK(cfg.n == 100);
    CHECK(cfg.knn_k == 4);
    CHECK(cfg.beta == doctest::Approx(0.3));
    CHECK(cfg.replicates == 5);
    CHECK(cfg.seed == 42);
    CHECK(cfg.cv_grid.size() == 3);
  }

  SUBCASE("unknown keys are rejected") {
    spit(tmp.path, R"({"graph":"knn","bogus_key":1})");
    CHECK_THROWS_AS(load_config(tmp.path, Scenario::denoise), ConfigError);
  }

  SUBCASE("invalid values are rejected") {
    spit(tmp.path, R"({"graph":"knn","gamma":1.5})");
    CHECK_THROWS_AS(load_config(tmp.path, Scenario::denoise), ConfigError);
    spit(tmp.path, R"({"graph":"nosuch"})");
    CHECK_THROWS_AS(load_config(tmp.path, Scenario::denoise), ConfigError);
    spit(tmp.path, R"({"missing_fraction":1.0})");
    CHECK_THROWS_AS(load_config(tmp.path, Scenario::missing), ConfigError);
    CHECK_THROWS_AS(load_config("definitely_not_here.json",
                                Scenario::denoise),
                    ConfigError);
  }
}

TEST_CASE("lambda 0 collapses TV onto the naive estimator") {
  ExperimentConfig cfg = tiny_config(Scenario::denoise);
  cfg.replicates = 1;
  cfg.lambda = 0.0;
  const RunOutcome outcome = run_denoise_experiment(cfg);
  REQUIRE(outcome.report.rows.size() == 1);
  const auto& row = outcome.report.rows[0];
  CHECK(row.values[column_index(outcome.report, "l1_tv")] ==
        doctest::Approx(
            row.values[column_index(outcome.report, "l1_naive")]));
  CHECK(row.values[column_index(outcome.report, "l2sq_tv")] ==
        doctest::Approx(
            row.values[column_index(outcome.report, "l2sq_naive")]));
}

TEST_CASE("experiment reports are deterministic across thread counts") {
  ExperimentConfig cfg = tiny_config(Scenario::denoise);
  cfg.replicates = 6;
  cfg.lambda_policy = "cv";
  cfg.cv_grid = {0.0, 0.02, 0.2};

  TempFile a("epinet_test_det_a.csv"), b("epinet_test_det_b.csv");
  cfg.threads = 1;
  emit_report(run_denoise_experiment(cfg).report, a.path, ReportFormat::csv);
  cfg.threads = 2;
  emit_report(run_denoise_experiment(cfg).report, b.path, ReportFormat::csv);
  CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("forecast experiment h=0 reduces to nowcast error") {
  ExperimentConfig cfg = tiny_config(Scenario::forecast);
  cfg.horizon = 0;
  cfg.replicates = 2;
  const RunOutcome outcome = run_forecast_experiment(cfg);
  for (const auto& row : outcome.report.rows) {
    const double l1_tv = row.values[column_index(outcome.report, "l1_tv")];
    const double fc = row.values[column_index(outcome.report, "l2sq_fc_tv")];
    CHECK(fc >= 0.0);
    CHECK(l1_tv >= 0.0);
    // at h=0 the forecast error is the nowcast l2 error of the same state
    CHECK(fc <= l1_tv + 1e-9);  // entries in [0,1] give l2^2 <= l1
  }
}

TEST_CASE("param experiment recovers rates from a noiseless window") {
  ExperimentConfig cfg = tiny_config(Scenario::params);
  cfg.k0 = 6;
  cfg.window = 5;
  cfg.replicates = 2;
  cfg.lambda = 0.0;  // fixed-0 policy: estimates from raw snapshots
  const RunOutcome outcome = run_param_experiment(cfg);
  for (const auto& row : outcome.report.rows) {
    CHECK(row.values[column_index(outcome.report, "beta_tv")] ==
          doctest::Approx(
              row.values[column_index(outcome.report, "beta_naive")]));
  }
}

TEST_CASE("missing experiment beats fill-zero naive on average") {
  ExperimentConfig cfg = tiny_config(Scenario::missing);
  cfg.n = 150;
  cfg.knn_k = 5;
  cfg.k0 = 10;
  cfg.beta = 0.5;
  cfg.gamma = 0.1;
  cfg.missing_fraction = 0.3;
  cfg.replicates = 8;
  cfg.lambda_policy = "cv";
  const RunOutcome outcome = run_missing_experiment(cfg);
  const double tv = median(column_values(outcome.report, "l1_tv"));
  const double naive = median(column_values(outcome.report, "l1_naive"));
  CHECK(tv <= naive + 1e-9);
}

TEST_CASE("county ingestion and smoothing") {
  TempFile cases("epinet_test_cases.csv");
  TempFile adjacency("epinet_test_adj.txt");

  SUBCASE("single county sits at its prevalence for any lambda") {
    spit(cases.path, "county_id,population,cases\nalpha,100,10\n");
    spit(adjacency.path, "");
    ExperimentConfig cfg;
    cfg.scenario = Scenario::county_smooth;
    cfg.cases_csv = cases.path;
    cfg.adjacency_path = adjacency.path;
    cfg.lambda_policy = "fixed";
    for (double lambda : {0.0, 1.0, 500.0}) {
      cfg.lambda = lambda;
      const CountyResult res = run_county_smoothing(cfg);
      CHECK(res.smoothed_prevalence[0] == doctest::Approx(0.1));
    }
  }

  SUBCASE("disconnected counties never mix") {
    spit(cases.path, "a,100,10\nb,100,30\n");
    spit(adjacency.path, "");
    ExperimentConfig cfg;
    cfg.scenario = Scenario::county_smooth;
    cfg.cases_csv = cases.path;
    cfg.adjacency_path = adjacency.path;
    cfg.lambda_policy = "fixed";
    cfg.lambda = 10.0;
    const CountyResult res = run_county_smoothing(cfg);
    CHECK(res.smoothed_prevalence[0] == doctest::Approx(0.1));
    CHECK(res.smoothed_prevalence[1] == doctest::Approx(0.3));
  }

  SUBCASE("lambda 0 returns raw prevalence, connected or not") {
    spit(cases.path, "a,100,10\nb,100,30\nc,200,40\n");
    spit(adjacency.path, "a b\nb c\n");
    ExperimentConfig cfg;
    cfg.scenario = Scenario::county_smooth;
    cfg.cases_csv = cases.path;
    cfg.adjacency_path = adjacency.path;
    cfg.lambda_policy = "fixed";
    cfg.lambda = 0.0;
    const CountyResult res = run_county_smoothing(cfg);
    CHECK(res.smoothed_prevalence[0] == doctest::Approx(0.1));
    CHECK(res.smoothed_prevalence[1] == doctest::Approx(0.3));
    CHECK(res.smoothed_prevalence[2] == doctest::Approx(0.2));
    // large lambda pulls the chain together
    cfg.lambda = 1e6;
    const CountyResult fused = run_county_smoothing(cfg);
    const double pooled = (10.0 + 30.0 + 40.0) / 400.0;
    for (int i = 0; i < 3; ++i)
      CHECK(fused.smoothed_prevalence[i] ==
            doctest::Approx(pooled).epsilon(1e-3));
  }

  SUBCASE("bad county inputs are rejected") {
    spit(cases.path, "a,100,150\n");  // cases > population
    spit(adjacency.path, "");
    CHECK_THROWS(ingest_county_data(cases.path, adjacency.path));
    spit(cases.path, "a,0,0\n");  // nonpositive population
    CHECK_THROWS(ingest_county_data(cases.path, adjacency.path));
    spit(cases.path, "a,100,10\n");
    spit(adjacency.path, "a nosuch\n");  // unknown id
    CHECK_THROWS(ingest_county_data(cases.path, adjacency.path));
    spit(adjacency.path, "a a\n");  // self adjacency
    CHECK_THROWS(ingest_county_data(cases.path, adjacency.path));
  }

  SUBCASE("county csv output") {
    spit(cases.path, "a,100,10\nb,400,40\n");
    spit(adjacency.path, "a b\n");
    ExperimentConfig cfg;
    cfg.scenario = Scenario::county_smooth;
    cfg.cases_csv = cases.path;
    cfg.adjacency_path = adjacency.path;
    cfg.lambda_policy = "fixed";
    cfg.lambda = 0.0;
    const CountyResult res = run_county_smoothing(cfg);
    TempFile out("epinet_test_county_out.csv");
    write_county_csv(res, out.path);
    const std::string text = slurp(out.path);
    CHECK(text.find("county_id,population,cases,raw_prevalence,"
                     "smoothed_prevalence") == 0);
    CHECK(text.find("\na,100,10,0.1") != std::string::npos);
  }
}

TEST_CASE("problem and result serialization") {
  Graph g{3, {{0, 1}, {1, 2}}, {}};
  Eigen::VectorXd y(3);
  y << 1.0, 0.0, 1.0;
  const DenoiseProblem pr = make_uniform_problem(y, g, 0.125);
  const std::string text = problem_to_json(pr);
  const DenoiseProblem back = problem_from_json(text, g);
  CHECK((back.targets - pr.targets).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.lambda == pr.lambda);
  Graph other{4, {{0, 1}}, {}};
  CHECK_THROWS(problem_from_json(text, other));

  const DenoiseResult res = tv_denoise(y, g, 0.125);
  const DenoiseResult res_back = result_from_json(result_to_json(res));
  CHECK((res_back.p_hat - res.p_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(res_back.objective == res.objective);
  CHECK(res_back.converged == res.converged);
}

TEST_CASE("param estimates reshape to one row per replicate and method") {
  ExperimentConfig cfg = tiny_config(Scenario::params);
  cfg.k0 = 6;
  cfg.window = 4;
  cfg.replicates = 2;
  const RunOutcome outcome = run_param_experiment(cfg);
  TempFile out("epinet_test_estimates.csv");
  write_estimate_rows_csv(outcome.report, out.path);
  std::ifstream in(out.path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "replicate,seed,method,beta_hat,gamma_hat,r0_hat,residual");
  int tv_rows = 0, naive_rows = 0;
  while (std::getline(in, line)) {
    if (line.find(",tv,") != std::string::npos) ++tv_rows;
    if (line.find(",naive,") != std::string::npos) ++naive_rows;
  }
  CHECK(tv_rows == 2);
  CHECK(naive_rows == 2);
}

TEST_CASE("dump_trajectory exports the first replicate") {
  ExperimentConfig cfg = tiny_config(Scenario::denoise);
  cfg.replicates = 1;
  TempFile dump("epinet_test_dump.csv");
  cfg.dump_trajectory = dump.path;
  run_denoise_experiment(cfg);
  std::ifstream in(dump.path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,p0,", 0) == 0);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.k0 + 1);
}

TEST_CASE("cli entry point") {
  TempFile cfg_file("epinet_test_cli_cfg.json");
  TempFile out("epinet_test_cli_out.csv");

  SUBCASE("missing config file exits 2") {
    const char* argv[] = {"epi", "denoise", "--config", "no_such_file.json"};
    CHECK(cli_main(4, argv) == 2);
  }

  SUBCASE("invalid config exits 2") {
    spit(cfg_file.path, R"({"gamma":2.0})");
    const char* argv[] = {"epi", "denoise", "--config",
                          cfg_file.path.c_str()};
    CHECK(cli_main(4, argv) == 2);
  }

  SUBCASE("small run exits 0 and writes the report") {
    spit(cfg_file.path,
         R"({"graph":"knn","n":30,"k":3,"beta":0.4,"gamma":0.2,"k0":4,)"
         R"("replicates":2,"lambda_policy":"fixed","lambda":0.05,)"
         R"("threads":1})");
    const char* argv[] = {"epi",   "denoise",          "--config",
                          cfg_file.path.c_str(), "--out", out.path.c_str()};
    CHECK(cli_main(6, argv) == 0);
    const Report report = read_report(out.path, ReportFormat::csv);
    CHECK(report.rows.size() == 2);
  }

  SUBCASE("non-convergence exits 3 but still writes the report") {
    spit(cfg_file.path,
         R"({"graph":"knn","n":30,"k":3,"beta":0.4,"gamma":0.2,"k0":4,)"
         R"("replicates":1,"lambda_policy":"fixed","lambda":0.3,)"
         R"("threads":1,"tol":1e-12,"max_iter":1})");
    const char* argv[] = {"epi",   "denoise",          "--config",
                          cfg_file.path.c_str(), "--out", out.path.c_str()};
    CHECK(cli_main(6, argv) == 3);
    const Report report = read_report(out.path, ReportFormat::csv);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].values[column_index(report, "converged")] == 0.0);
  }
}
