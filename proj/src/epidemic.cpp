#include "epinet/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace epinet {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_state(const Eigen::VectorXd& p, const EpidemicParams& params,
                 const char* who) {
  require(p.size() == params.beta.size(),
          std::string(who) + ": state length does not match params");
  require(p.allFinite(), std::string(who) + ": non-finite state");
}

}  // namespace

Eigen::SparseMatrix<double> omega_from_graph(const Graph& g) {
  Eigen::SparseMatrix<double> omega(g.n, g.n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * g.edges.size());
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto& [u, v] = g.edges[e];
    const double w = g.weighted() ? g.weights[e] : 1.0;
    trip.emplace_back(u, v, w);
    trip.emplace_back(v, u, w);
  }
  omega.setFromTriplets(trip.begin(), trip.end());
  return omega;
}

ValidationReport validate_params(const EpidemicParams& params) {
  ValidationReport report;
  const int n = static_cast<int>(params.beta.size());
  if (params.gamma.size() != n || params.omega.rows() != n ||
      params.omega.cols() != n) {
    report.ok = false;
    report.issues.push_back({-1, "shape mismatch", 0.0});
    return report;
  }
  std::vector<ValidationIssue> issues;
  for (int i = 0; i < n; ++i) {
    if (!(params.gamma[i] > 0.0 && params.gamma[i] < 1.0))
      issues.push_back({i, "gamma outside (0,1)", params.gamma[i]});
    if (!(params.beta[i] >= 0.0 && params.beta[i] < 1.0))
      issues.push_back({i, "beta outside [0,1)", params.beta[i]});
  }
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < params.omega.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(params.omega, k); it;
         ++it) {
      if (it.row() == it.col() && it.value() != 0.0)
        issues.push_back({static_cast<int>(it.row()),
                          "nonzero omega diagonal", it.value()});
      if (it.value() < 0.0)
        issues.push_back({static_cast<int>(it.row()), "negative omega entry",
                          it.value()});
      row_sums[it.row()] += it.value();
    }
  const Eigen::SparseMatrix<double> skew =
      Eigen::SparseMatrix<double>(params.omega.transpose()) - params.omega;
  if (skew.coeffs().size() > 0 && skew.coeffs().cwiseAbs().maxCoeff() > 1e-12)
    issues.push_back({-1, "omega not symmetric",
                      skew.coeffs().cwiseAbs().maxCoeff()});
  for (int i = 0; i < n; ++i) {
    const double pressure = params.beta[i] * row_sums[i];
    if (!(pressure < 1.0))
      issues.push_back({i, "beta * sum(omega row) >= 1", pressure});
  }
  std::sort(issues.begin(), issues.end(),
            [](const ValidationIssue& a, const ValidationIssue& b) {
              return std::abs(a.value) > std::abs(b.value);
            });
  if (issues.size() > 8) issues.resize(8);
  report.ok = issues.empty();
  report.issues = std::move(issues);
  return report;
}

EpidemicParams make_params(const Graph& g, double beta, double gamma,
                           bool checked) {
  EpidemicParams params;
  params.beta = Eigen::VectorXd::Constant(g.n, beta);
  params.gamma = Eigen::VectorXd::Constant(g.n, gamma);
  params.omega = omega_from_graph(g);
  if (checked) {
    const ValidationReport report = validate_params(params);
    if (!report.ok) {
      std::string msg = "make_params: invalid epidemic parameters:";
      for (const auto& issue : report.issues)
        msg += " [node " + std::to_string(issue.node) + ": " + issue.what +
               " (" + std::to_string(issue.value) + ")]";
      throw std::invalid_argument(msg);
    }
  }
  return params;
}

Eigen::VectorXd sis_step(const Eigen::VectorXd& p,
                         const EpidemicParams& params) {
  check_state(p, params, "sis_step");
  const Eigen::VectorXd pressure = params.omega * p;
  // Both terms are nonnegative and their sum stays below 1 under the
  // well-posedness condition, so the update cannot leave [0,1] even in
  // floating point.
  return (p.array() * (1.0 - params.gamma.array()) +
          (1.0 - p.array()) * params.beta.array() * pressure.array())
      .matrix();
}

Eigen::MatrixXd evolution_operator(const Eigen::VectorXd& p,
                                   const EpidemicParams& params) {
  check_state(p, params, "evolution_operator");
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd o = Eigen::MatrixXd(params.omega);
  o.array().colwise() *= (1.0 - p.array()) * params.beta.array();
  o += Eigen::MatrixXd::Identity(n, n);
  o.diagonal() -= params.gamma;
  return o;
}

EpidemicState sir_step(const EpidemicState& state,
                       const EpidemicParams& params) {
  require(state.r.has_value(), "sir_step: state has no recovered track");
  check_state(state.p, params, "sir_step");
  const Eigen::VectorXd& p = state.p;
  const Eigen::VectorXd& r = *state.r;
  require(r.size() == p.size(), "sir_step: recovered length mismatch");
  require((p.array() >= 0.0).all() && (r.array() >= 0.0).all() &&
              ((p + r).array() <= 1.0 + 1e-12).all(),
          "sir_step: state outside the simplex");
  const Eigen::VectorXd pressure = params.omega * p;
  EpidemicState next;
  next.p = (p.array() * (1.0 - params.gamma.array()) +
            (1.0 - p.array() - r.array()) * params.beta.array() *
                pressure.array())
               .matrix();
  next.r = (r.array() + params.gamma.array() * p.array()).matrix();
  return next;
}

std::vector<Eigen::VectorXd> simulate(const Eigen::VectorXd& p0,
                                      const EpidemicParams& params,
                                      int steps) {
  require(steps >= 0, "simulate: steps must be >= 0");
  std::vector<Eigen::VectorXd> trajectory;
  trajectory.reserve(steps + 1);
  trajectory.push_back(p0);
  for (int k = 0; k < steps; ++k)
    trajectory.push_back(sis_step(trajectory.back(), params));
  return trajectory;
}

Eigen::VectorXd patient_zero_state(int n, int index) {
  require(n >= 1, "patient_zero_state: n must be >= 1");
  require(index >= 0 && index < n, "patient_zero_state: index out of range");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p[index] = 1.0;
  return p;
}

Eigen::VectorXd random_patient_zero(int n, Rng& rng) {
  require(n >= 1, "random_patient_zero: n must be >= 1");
  return patient_zero_state(n, static_cast<int>(rng.uniform_int(n)));
}

Eigen::VectorXd forecast(const Eigen::VectorXd& p_hat,
                         const EpidemicParams& params, int horizon) {
  require(horizon >= 0, "forecast: horizon must be >= 0");
  Eigen::VectorXd p = p_hat;
  for (int k = 0; k < horizon; ++k)
    p = sis_step(p, params).cwiseMax(0.0).cwiseMin(1.0);
  return p;
}

double expected_infections(const Eigen::VectorXd& p) {
  require((p.array() >= 0.0).all(), "expected_infections: negative entry");
  return p.sum();
}

double lipschitz_constant(const EpidemicParams& params) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(params.omega.rows());
  for (int k = 0; k < params.omega.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(params.omega, k); it;
         ++it)
      row_sums[it.row()] += std::abs(it.value());
  const double max_row = row_sums.size() ? row_sums.maxCoeff() : 0.0;
  return 1.0 - params.gamma.minCoeff() + params.beta.maxCoeff() * max_row;
}

double forecast_error_bound(const RiskBoundInputs& nowcast,
                            const EpidemicParams& params, int horizon) {
  require(horizon >= 0, "forecast_error_bound: horizon must be >= 0");
  return std::pow(lipschitz_constant(params), horizon) *
         l1_risk_bound(nowcast);
}

Eigen::VectorXd sample_observations(const Eigen::VectorXd& p, double alpha,
                                    Rng& rng) {
  require((p.array() >= 0.0).all() && (p.array() <= 1.0).all(),
          "sample_observations: p must lie in [0,1]");
  require(alpha >= 0.0 && alpha < 1.0,
          "sample_observations: alpha must be in [0,1)");
  Eigen::VectorXd y(p.size());
  for (int i = 0; i < p.size(); ++i)
    y[i] = rng.bernoulli((1.0 - alpha) * p[i] + alpha) ? 1.0 : 0.0;
  return y;
}

Eigen::VectorXd sample_observations(const Eigen::VectorXd& p, double alpha,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return sample_observations(p, alpha, rng);
}

Eigen::VectorXd sample_mask(const Eigen::VectorXd& pi, Rng& rng) {
  require((pi.array() > 0.0).all() && (pi.array() <= 1.0).all(),
          "sample_mask: pi entries must be in (0,1]");
  Eigen::VectorXd m(pi.size());
  for (int i = 0; i < pi.size(); ++i) m[i] = rng.bernoulli(pi[i]) ? 1.0 : 0.0;
  return m;
}

Eigen::VectorXd sample_mask(const Eigen::VectorXd& pi, std::uint64_t seed) {
  Rng rng(seed);
  return sample_mask(pi, rng);
}

namespace {

void write_vector_row(std::ofstream& out, int t, const Eigen::VectorXd& v) {
  char buf[64];
  out << t;
  for (int i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out << ',' << buf;
  }
  out << '\n';
}

}  // namespace

void write_trajectory_csv(const std::vector<Eigen::VectorXd>& trajectory,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  const int n = trajectory.empty() ? 0 : static_cast<int>(trajectory[0].size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",p" << i;
  out << '\n';
  for (size_t t = 0; t < trajectory.size(); ++t)
    write_vector_row(out, static_cast<int>(t), trajectory[t]);
}

void write_observations_csv(const std::vector<ObservationSet>& observations,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_observations_csv: cannot open " + path);
  const int n =
      observations.empty() ? 0 : static_cast<int>(observations[0].y.size());
  out << "t,field";
  for (int i = 0; i < n; ++i) out << ",v" << i;
  out << '\n';
  for (size_t t = 0; t < observations.size(); ++t) {
    out << t << ",y";
    for (int i = 0; i < n; ++i) out << ',' << observations[t].y[i];
    out << '\n';
    out << t << ",mask";
    for (int i = 0; i < n; ++i) out << ',' << observations[t].mask[i];
    out << '\n';
  }
}

}  // namespace epinet
