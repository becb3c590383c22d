#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "epinet/graph.hpp"

namespace epinet {

struct SolverConfig {
  double tol_primal = 1e-8;  // RMS splitting-constraint residual
  double tol_dual = 1e-8;    // RMS dual residual
  int max_iter = 50000;
  double admm_penalty = 1.0;     // initial penalty, scaled up with lambda
  bool adaptive_penalty = true;  // rebalance penalty when residuals diverge
};

// Weighted fidelity + edge-weighted total variation:
//   minimize  sum_i a_i (t_i - p_i)^2 + lambda * sum_e b_e |(D p)_e|
// The uniform case (a = 1/n, b = 1) is the one-bit denoiser; masked
// observations use a_i = m_i / n; aggregated-population smoothing uses
// a_c = n_c with its own edge weights.
struct DenoiseProblem {
  Eigen::VectorXd targets;
  Eigen::VectorXd node_weights;  // a_i >= 0, at least one positive
  Eigen::VectorXd edge_weights;  // b_e >= 0, aligned with graph->edges
  double lambda = 0.0;
  const Graph* graph = nullptr;  // non-owning
};

DenoiseProblem make_uniform_problem(const Eigen::VectorXd& y, const Graph& g,
                                    double lambda);
DenoiseProblem make_masked_problem(const Eigen::VectorXd& y_tilde,
                                   const Eigen::VectorXd& mask, const Graph& g,
                                   double lambda);

struct DenoiseResult {
  Eigen::VectorXd p_hat;  // clamped to [0,1]^n
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  double lambda_used = 0.0;
};

// Reusable solver handle: the sparse factorization of the linearized system
// is cached across iterations and across solve() calls, and consecutive
// solves warm-start from the previous solution. Regularization-path sweeps
// (cross-validation) should reuse one instance per weight configuration.
class TvSolver {
 public:
  TvSolver(const Graph& g, Eigen::VectorXd node_weights,
           Eigen::VectorXd edge_weights);

  DenoiseResult solve(const Eigen::VectorXd& targets, double lambda,
                      const SolverConfig& cfg = {});

  void reset();  // drop warm-start state

 private:
  void ensure_factorization(double rho);

  int n_ = 0;
  const Graph* graph_ = nullptr;
  Eigen::VectorXd a_full_;
  Eigen::VectorXd b_full_;
  double a_sum_ = 0.0;

  // Live subproblem: edges with positive weight, nodes in components that
  // carry at least one positive node weight. Remaining nodes decouple and
  // sit at the weighted target mean.
  std::vector<int> live_nodes_;
  std::vector<int> live_index_;
  Eigen::VectorXd a_live_;
  Eigen::VectorXd b_eff_;
  Eigen::SparseMatrix<double> d_;   // m_eff x n_live
  Eigen::SparseMatrix<double> lb_;  // D^T diag(b) D

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
  bool pattern_ready_ = false;
  double factored_rho_ = -1.0;

  bool has_warm_ = false;
  double warm_rho_ = 0.0;
  Eigen::VectorXd warm_p_, warm_z_, warm_u_;
};

DenoiseResult tv_denoise(const Eigen::VectorXd& y, const Graph& g,
                         double lambda, const SolverConfig& cfg = {});
DenoiseResult tv_denoise_masked(const Eigen::VectorXd& y_tilde,
                                const Eigen::VectorXd& mask, const Graph& g,
                                double lambda, const SolverConfig& cfg = {});
DenoiseResult tv_denoise_weighted(const DenoiseProblem& problem,
                                  const SolverConfig& cfg = {});

Eigen::VectorXd clamp_unit(const Eigen::VectorXd& p);

double objective_value(const Eigen::VectorXd& p, const DenoiseProblem& problem);

// lambda = sqrt(2) * rho / n * log(4 n^2 / delta)
double theoretical_lambda(int n, double rho, double delta);

// lambda = 9 sqrt(2) * rho * log(n) / n (partial-observation regime)
double theoretical_lambda_missing(int n, double rho);

// Zero every entry <= alpha; optionally rescale survivors by
// (x - alpha) / (1 - alpha).
Eigen::VectorXd correct_false_positives(const Eigen::VectorXd& rho_hat,
                                        double alpha, bool rescale = false);

// 20 log-spaced points in [1e-4, 1].
std::vector<double> default_lambda_grid();

struct CvConfig {
  std::vector<double> lambda_grid = default_lambda_grid();  // increasing, >= 0
  double holdout_fraction = 0.2;
  int folds = 5;
  std::uint64_t seed = 0;
};

struct CvResult {
  double lambda_star = 0.0;
  std::vector<std::pair<double, double>> loss_table;  // (lambda, mean loss)
};

// Node-holdout cross-validation: each fold hides a random fraction of the
// observed nodes, refits on the rest, and scores squared error on the
// hidden entries. Ties break toward larger lambda.
CvResult cross_validate_lambda(const Eigen::VectorXd& y,
                               const std::optional<Eigen::VectorXd>& mask,
                               const Graph& g, const CvConfig& cv,
                               const SolverConfig& scfg = {});

// Same protocol on an arbitrary weighted problem (lambda field ignored).
CvResult cross_validate_lambda_weighted(const DenoiseProblem& base,
                                        const CvConfig& cv,
                                        const SolverConfig& scfg = {});

struct LambdaPolicy {
  enum class Kind { fixed, theory, theory_missing, cv };
  Kind kind = Kind::cv;
  double lambda = 0.0;  // fixed
  double delta = 0.05;  // theory
  CvConfig cv;
};

// Pick the regularization weight for one observation vector under a policy.
// Theory policies use the spectral bound for rho and require connectivity.
double resolve_lambda(const LambdaPolicy& policy, const Eigen::VectorXd& y,
                      const std::optional<Eigen::VectorXd>& mask,
                      const Graph& g, const SolverConfig& scfg = {});

// ---------------------------------------------------------------------------
// High-probability risk-bound calculators (exact arithmetic on given inputs)
// ---------------------------------------------------------------------------

struct RiskBoundInputs {
  double rho = 0.0;
  double kappa_t = 0.0;   // compatibility factor (or its lower bound)
  double t_size = 0.0;    // |T|
  double s_support = 0.0; // support size of the signal
  double dp_tc_l1 = 0.0;  // l1 mass of edge differences outside T
  double dp_l0 = 0.0;     // number of nonzero edge differences
  int n = 0;
  double delta = 0.05;
};

// l1 estimation-error bound for the full-observation denoiser.
double l1_risk_bound(const RiskBoundInputs& in);

// Squared-l2 estimation-error bound for the full-observation denoiser.
double l2_risk_bound(const RiskBoundInputs& in);

// Bracketed quantity of the partial-observation bound (absolute constants
// are not specified, so only the bracket times log^2 n is reported):
//   { rho^2 kappa_pi |T| / kappa_T^2 + ||pi||_1 ||pi^{-1}||_1 / n^2 } log^2 n
double masked_l2_risk_bound(int n, const Eigen::VectorXd& pi, double rho,
                            double kappa_t, double t_size);

}  // namespace epinet
