#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epinet/denoise.hpp"
#include "epinet/graph.hpp"
#include "epinet/rng.hpp"

namespace epinet {

// Networked SIS/SIR rates. Well-posedness requires gamma_i in (0,1) and
// beta_i * sum_j omega_ij < 1 for every node; under that condition the
// discrete dynamics map [0,1]^n into itself.
struct EpidemicParams {
  Eigen::VectorXd beta;                // infection rates, in [0,1)
  Eigen::VectorXd gamma;               // healing rates, in (0,1)
  Eigen::SparseMatrix<double> omega;   // symmetric contact strengths, zero diag
};

// Builds per-node rates from scalars and the contact matrix from the graph
// weights (1.0 where unweighted). Throws on a well-posedness violation
// unless checked = false.
EpidemicParams make_params(const Graph& g, double beta, double gamma,
                           bool checked = true);

Eigen::SparseMatrix<double> omega_from_graph(const Graph& g);

struct ValidationIssue {
  int node = -1;
  std::string what;
  double value = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;  // worst offenders first, capped
};

ValidationReport validate_params(const EpidemicParams& params);

// Infection-probability state; `r` tracks recovered probabilities for SIR
// trajectories (p_i + r_i <= 1).
struct EpidemicState {
  Eigen::VectorXd p;
  std::optional<Eigen::VectorXd> r;
};

// One step of p' = p + (1 - p) .* beta .* (Omega p) - gamma .* p.
Eigen::VectorXd sis_step(const Eigen::VectorXd& p,
                         const EpidemicParams& params);

// Dense state-dependent transition O(p) = I + (I - diag(p)) B Omega - Gamma,
// so that sis_step(p) == O(p) * p. Intended for analysis at small n; the
// simulators use the entrywise form.
Eigen::MatrixXd evolution_operator(const Eigen::VectorXd& p,
                                   const EpidemicParams& params);

// SIR: p' = p + (1 - p - r) .* beta .* (Omega p) - gamma .* p,
//      r' = r + gamma .* p.
EpidemicState sir_step(const EpidemicState& state,
                       const EpidemicParams& params);

// Trajectory [p0, F(p0), ..., F^k(p0)] of length steps + 1.
std::vector<Eigen::VectorXd> simulate(const Eigen::VectorXd& p0,
                                      const EpidemicParams& params, int steps);

Eigen::VectorXd patient_zero_state(int n, int index);
Eigen::VectorXd random_patient_zero(int n, Rng& rng);

// Same recursion as simulate, seeded at an estimated state; each step is
// clamped to [0,1] since estimates may sit at the boundary numerically.
Eigen::VectorXd forecast(const Eigen::VectorXd& p_hat,
                         const EpidemicParams& params, int horizon);

// Expected epidemic size sum_i p_i.
double expected_infections(const Eigen::VectorXd& p);

// Step-to-step l1 expansion constant
//   1 - min gamma + max beta * max_i sum_j omega_ij.
double lipschitz_constant(const EpidemicParams& params);

// Forecast-error bound: the l1 nowcast bound amplified by
// lipschitz_constant^horizon.
double forecast_error_bound(const RiskBoundInputs& nowcast,
                            const EpidemicParams& params, int horizon);

// One-bit observation of a probability field: y_i ~ Bernoulli((1-alpha) p_i
// + alpha), independent across nodes.
Eigen::VectorXd sample_observations(const Eigen::VectorXd& p, double alpha,
                                    Rng& rng);
Eigen::VectorXd sample_observations(const Eigen::VectorXd& p, double alpha,
                                    std::uint64_t seed);

// Independent mask m_i ~ Bernoulli(pi_i), pi_i in (0,1].
Eigen::VectorXd sample_mask(const Eigen::VectorXd& pi, Rng& rng);
Eigen::VectorXd sample_mask(const Eigen::VectorXd& pi, std::uint64_t seed);

// One snapshot of what a surveillance system sees.
struct ObservationSet {
  Eigen::VectorXd y;     // binary statuses (real-valued accepted on input)
  Eigen::VectorXd mask;  // all-ones when fully observed
  double alpha = 0.0;
  Eigen::VectorXd pi;
  std::uint64_t seed = 0;
};

// CSV export, one row per time step, full precision.
void write_trajectory_csv(const std::vector<Eigen::VectorXd>& trajectory,
                          const std::string& path);
void write_observations_csv(const std::vector<ObservationSet>& observations,
                            const std::string& path);

}  // namespace epinet
