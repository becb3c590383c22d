#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <vector>

#include "epinet/denoise.hpp"
#include "epinet/epidemic.hpp"
#include "epinet/graph.hpp"

namespace epinet {

// Stacked linear system recovering scalar (beta, gamma) from a sequence of
// infection-probability states: each transition t contributes the n rows
//   [ (1 - p^t_i) (Omega p^t)_i ,  -p^t_i ]  *  [beta; gamma]  =  p^{t+1}_i - p^t_i.
struct PhiSystem {
  Eigen::MatrixXd phi;       // (n * transitions) x 2
  Eigen::VectorXd delta_p;   // stacked differences
  std::vector<int> times_used;
};

PhiSystem build_phi(const std::vector<Eigen::VectorXd>& trajectory,
                    const Eigen::SparseMatrix<double>& omega);

struct ParamEstimate {
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
  std::optional<double> r0_hat;  // withheld when degenerate or gamma <= 0
  double residual_norm = 0.0;
  bool degenerate = false;  // effective rank < 2
};

// Least squares via SVD with singular-value cutoff 1e-10 * sigma_max.
ParamEstimate estimate_params(const PhiSystem& system);

double reproductive_number(double beta_hat, double gamma_hat);

struct ObservationEstimate {
  ParamEstimate tv;     // from denoised snapshots
  ParamEstimate naive;  // from the raw observations (masked entries 0)
  double lambda_used = 0.0;
  bool all_converged = true;  // every snapshot solve hit tolerance
};

// Denoises each snapshot (masked solver when a snapshot has missing
// entries), then fits the stacked system on the denoised sequence; the raw
// observations give the comparison estimate. Under the cv policy, lambda is
// fitted once on the last snapshot and reused across the window.
ObservationEstimate estimate_params_from_observations(
    const std::vector<ObservationSet>& observations, const Graph& g,
    const Eigen::SparseMatrix<double>& omega, const LambdaPolicy& policy,
    const SolverConfig& scfg = {});

}  // namespace epinet
