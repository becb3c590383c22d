/*
 * Graph total-variation denoising via ADMM on the splitting z = D p:
 *
 *   minimize_p  sum_i a_i (t_i - p_i)^2 + lambda * sum_e b_e |(D p)_e|
 *
 * where D is the signed edge-node incidence matrix. The augmented
 * Lagrangian uses a per-edge penalty rho * b_e, so the p-update solves
 *
 *   (2 diag(a) + rho * D^T diag(b) D) p = 2 a .* t + rho * D^T diag(b) (z - u)
 *
 * with a cached sparse LDLT factorization, and the z-update is entrywise
 * soft-thresholding at lambda / rho (the edge weight cancels). The penalty
 * is rebalanced by factors of two whenever the primal and dual residuals
 * drift apart by more than 10x. The minimizer is clamped to [0,1]^n at the
 * end; clamping never increases the objective for targets in [0,1].
 *
 * Edges with zero weight and graph components carrying no positive node
 * weight drop out of the optimization: the former contribute nothing to
 * either term, the latter are unconstrained and sit at the weighted target
 * mean (also the solver's initial iterate).
 */

#include "epinet/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace epinet {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_problem(const DenoiseProblem& pr) {
  require(pr.graph != nullptr, "denoise: problem has no graph");
  const int n = pr.graph->n;
  const int m = pr.graph->num_edges();
  require(pr.targets.size() == n, "denoise: targets length != n");
  require(pr.node_weights.size() == n, "denoise: node_weights length != n");
  require(pr.edge_weights.size() == m, "denoise: edge_weights length != m");
  require(pr.targets.allFinite() && pr.node_weights.allFinite() &&
              pr.edge_weights.allFinite(),
          "denoise: non-finite inputs");
  require((pr.node_weights.array() >= 0.0).all(),
          "denoise: negative node weight");
  require((pr.edge_weights.array() >= 0.0).all(),
          "denoise: negative edge weight");
  require(pr.node_weights.sum() > 0.0,
          "denoise: all node weights are zero");
  require(std::isfinite(pr.lambda) && pr.lambda >= 0.0,
          "denoise: lambda must be >= 0");
}

double soft(double v, double k) {
  if (v > k) return v - k;
  if (v < -k) return v + k;
  return 0.0;
}

}  // namespace

Eigen::VectorXd clamp_unit(const Eigen::VectorXd& p) {
  return p.cwiseMax(0.0).cwiseMin(1.0);
}

double objective_value(const Eigen::VectorXd& p, const DenoiseProblem& pr) {
  check_problem(pr);
  require(p.size() == pr.graph->n, "objective_value: length mismatch");
  double fid = (pr.node_weights.array() *
                (pr.targets - p).array().square())
                   .sum();
  double tv = 0.0;
  for (int e = 0; e < pr.graph->num_edges(); ++e) {
    const auto& [u, v] = pr.graph->edges[e];
    tv += pr.edge_weights[e] * std::abs(p[u] - p[v]);
  }
  return fid + pr.lambda * tv;
}

DenoiseProblem make_uniform_problem(const Eigen::VectorXd& y, const Graph& g,
                                    double lambda) {
  DenoiseProblem pr;
  pr.targets = y;
  pr.node_weights = Eigen::VectorXd::Constant(g.n, 1.0 / g.n);
  pr.edge_weights = Eigen::VectorXd::Ones(g.num_edges());
  pr.lambda = lambda;
  pr.graph = &g;
  return pr;
}

DenoiseProblem make_masked_problem(const Eigen::VectorXd& y_tilde,
                                   const Eigen::VectorXd& mask, const Graph& g,
                                   double lambda) {
  require(mask.size() == g.n, "tv_denoise_masked: mask length != n");
  for (int i = 0; i < mask.size(); ++i)
    require(mask[i] == 0.0 || mask[i] == 1.0,
            "tv_denoise_masked: mask entries must be 0 or 1");
  require(mask.sum() > 0.0, "tv_denoise_masked: mask is all zero");
  DenoiseProblem pr;
  pr.targets = y_tilde;
  pr.node_weights = mask / g.n;
  pr.edge_weights = Eigen::VectorXd::Ones(g.num_edges());
  pr.lambda = lambda;
  pr.graph = &g;
  return pr;
}

// ---------------------------------------------------------------------------
// TvSolver
// ---------------------------------------------------------------------------

TvSolver::TvSolver(const Graph& g, Eigen::VectorXd node_weights,
                   Eigen::VectorXd edge_weights)
    : n_(g.n),
      graph_(&g),
      a_full_(std::move(node_weights)),
      b_full_(std::move(edge_weights)) {
  DenoiseProblem probe;
  probe.targets = Eigen::VectorXd::Zero(n_);
  probe.node_weights = a_full_;
  probe.edge_weights = b_full_;
  probe.graph = graph_;
  check_problem(probe);
  a_sum_ = a_full_.sum();

  // Components of the positive-weight edge structure.
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int e = 0; e < graph_->num_edges(); ++e) {
    if (b_full_[e] <= 0.0) continue;
    const auto& [u, v] = graph_->edges[e];
    parent[find(u)] = find(v);
  }
  std::vector<double> comp_weight(n_, 0.0);
  for (int i = 0; i < n_; ++i) comp_weight[find(i)] += a_full_[i];

  live_index_.assign(n_, -1);
  for (int i = 0; i < n_; ++i) {
    if (comp_weight[find(i)] > 0.0) {
      live_index_[i] = static_cast<int>(live_nodes_.size());
      live_nodes_.push_back(i);
    }
  }
  // Positive-weight edges inside fully unweighted components drop out with
  // their nodes (those nodes sit at the target mean regardless).
  std::vector<int> eff;
  for (int e = 0; e < graph_->num_edges(); ++e) {
    if (b_full_[e] <= 0.0) continue;
    if (live_index_[graph_->edges[e].first] < 0) continue;
    eff.push_back(e);
  }
  const int nl = static_cast<int>(live_nodes_.size());
  a_live_.resize(nl);
  for (int i = 0; i < nl; ++i) a_live_[i] = a_full_[live_nodes_[i]];

  b_eff_.resize(eff.size());
  std::vector<Eigen::Triplet<double>> dt;
  dt.reserve(2 * eff.size());
  for (size_t r = 0; r < eff.size(); ++r) {
    const int e = eff[r];
    b_eff_[static_cast<int>(r)] = b_full_[e];
    const auto& [u, v] = graph_->edges[e];
    dt.emplace_back(static_cast<int>(r), live_index_[u], 1.0);
    dt.emplace_back(static_cast<int>(r), live_index_[v], -1.0);
  }
  d_.resize(static_cast<int>(eff.size()), nl);
  d_.setFromTriplets(dt.begin(), dt.end());
  lb_ = d_.transpose() * b_eff_.asDiagonal() * d_;
}

void TvSolver::reset() {
  has_warm_ = false;
  factored_rho_ = -1.0;
}

void TvSolver::ensure_factorization(double rho) {
  if (factored_rho_ == rho) return;
  Eigen::SparseMatrix<double> m = lb_ * rho;
  const int nl = static_cast<int>(live_nodes_.size());
  for (int i = 0; i < nl; ++i) m.coeffRef(i, i) += 2.0 * a_live_[i];
  if (!pattern_ready_) {
    factor_.analyzePattern(m);
    pattern_ready_ = true;
  }
  factor_.factorize(m);
  if (factor_.info() != Eigen::Success)
    throw std::runtime_error("tv_denoise: factorization failed");
  factored_rho_ = rho;
}

DenoiseResult TvSolver::solve(const Eigen::VectorXd& targets, double lambda,
                              const SolverConfig& cfg) {
  require(targets.size() == n_ && targets.allFinite(),
          "tv_denoise: bad targets");
  require(std::isfinite(lambda) && lambda >= 0.0,
          "tv_denoise: lambda must be >= 0");
  require(cfg.tol_primal > 0.0 && cfg.tol_dual > 0.0 && cfg.max_iter >= 1 &&
              cfg.admm_penalty > 0.0,
          "tv_denoise: invalid solver config");

  DenoiseProblem pr;
  pr.targets = targets;
  pr.node_weights = a_full_;
  pr.edge_weights = b_full_;
  pr.lambda = lambda;
  pr.graph = graph_;

  const double mean0 = a_full_.dot(targets) / a_sum_;
  const int nl = static_cast<int>(live_nodes_.size());
  const int me = static_cast<int>(b_eff_.size());

  DenoiseResult res;
  res.lambda_used = lambda;

  if (lambda == 0.0 || me == 0) {
    // Fidelity-only: observed nodes sit at their targets, the rest at the
    // weighted mean (the solver's initial iterate).
    Eigen::VectorXd p(n_);
    for (int i = 0; i < n_; ++i)
      p[i] = a_full_[i] > 0.0 ? targets[i] : mean0;
    res.p_hat = clamp_unit(p);
    res.converged = true;
    res.objective = objective_value(res.p_hat, pr);
    has_warm_ = false;
    return res;
  }

  Eigen::VectorXd t_live(nl);
  for (int i = 0; i < nl; ++i) t_live[i] = targets[live_nodes_[i]];
  const Eigen::VectorXd at2 = 2.0 * a_live_.cwiseProduct(t_live);

  double rho;
  Eigen::VectorXd p, z, u;
  if (has_warm_ && warm_p_.size() == nl) {
    rho = warm_rho_;
    p = warm_p_;
    z = warm_z_;
    u = warm_u_;
  } else {
    rho = cfg.admm_penalty * std::max(1.0, lambda);
    p = Eigen::VectorXd::Constant(nl, mean0);
    z = d_ * p;
    u = Eigen::VectorXd::Zero(me);
  }
  ensure_factorization(rho);

  const double sqrt_me = std::sqrt(static_cast<double>(me));
  const double sqrt_nl = std::sqrt(static_cast<double>(nl));
  int adaptations = 0;
  double primal_rms = 0.0, dual_rms = 0.0;
  int iter = 0;
  bool converged = false;
  Eigen::VectorXd dp(me), v(me), z_new(me), rhs(nl), s(nl);
  while (iter < cfg.max_iter) {
    ++iter;
    rhs = at2 + rho * (d_.transpose() * b_eff_.cwiseProduct(z - u));
    p = factor_.solve(rhs);
    dp = d_ * p;
    v = dp + u;
    const double k = lambda / rho;
    for (int e = 0; e < me; ++e) z_new[e] = soft(v[e], k);
    u = v - z_new;
    primal_rms = (dp - z_new).norm() / sqrt_me;
    s = rho * (d_.transpose() * b_eff_.cwiseProduct(z_new - z));
    dual_rms = s.norm() / sqrt_nl;
    z = z_new;
    if (primal_rms <= cfg.tol_primal && dual_rms <= cfg.tol_dual) {
      converged = true;
      break;
    }
    if (cfg.adaptive_penalty && iter % 10 == 0 && adaptations < 100) {
      if (primal_rms > 10.0 * dual_rms && rho < 1e14) {
        rho *= 2.0;
        u *= 0.5;
        ensure_factorization(rho);
        ++adaptations;
      } else if (dual_rms > 10.0 * primal_rms && rho > 1e-12) {
        rho *= 0.5;
        u *= 2.0;
        ensure_factorization(rho);
        ++adaptations;
      }
    }
  }

  has_warm_ = true;
  warm_rho_ = rho;
  warm_p_ = p;
  warm_z_ = z;
  warm_u_ = u;

  Eigen::VectorXd full = Eigen::VectorXd::Constant(n_, mean0);
  for (int i = 0; i < nl; ++i) full[live_nodes_[i]] = p[i];
  res.p_hat = clamp_unit(full);
  res.objective = objective_value(res.p_hat, pr);
  res.iterations = iter;
  res.primal_residual = primal_rms;
  res.dual_residual = dual_rms;
  res.converged = converged;
  return res;
}

// ---------------------------------------------------------------------------
// Free-function entry points
// ---------------------------------------------------------------------------

DenoiseResult tv_denoise_weighted(const DenoiseProblem& problem,
                                  const SolverConfig& cfg) {
  check_problem(problem);
  TvSolver solver(*problem.graph, problem.node_weights, problem.edge_weights);
  return solver.solve(problem.targets, problem.lambda, cfg);
}

DenoiseResult tv_denoise(const Eigen::VectorXd& y, const Graph& g,
                         double lambda, const SolverConfig& cfg) {
  return tv_denoise_weighted(make_uniform_problem(y, g, lambda), cfg);
}

DenoiseResult tv_denoise_masked(const Eigen::VectorXd& y_tilde,
                                const Eigen::VectorXd& mask, const Graph& g,
                                double lambda, const SolverConfig& cfg) {
  return tv_denoise_weighted(make_masked_problem(y_tilde, mask, g, lambda),
                             cfg);
}

// ---------------------------------------------------------------------------
// Regularization choices
// ---------------------------------------------------------------------------

double theoretical_lambda(int n, double rho, double delta) {
  require(n >= 1, "theoretical_lambda: n must be >= 1");
  require(rho > 0.0, "theoretical_lambda: rho must be > 0");
  require(delta > 0.0 && delta <= 1.0,
          "theoretical_lambda: delta must be in (0,1]");
  const double nn = static_cast<double>(n);
  return std::sqrt(2.0) * rho / nn * std::log(4.0 * nn * nn / delta);
}

double theoretical_lambda_missing(int n, double rho) {
  require(n >= 2, "theoretical_lambda_missing: n must be >= 2");
  require(rho > 0.0, "theoretical_lambda_missing: rho must be > 0");
  const double nn = static_cast<double>(n);
  return 9.0 * std::sqrt(2.0) * rho * std::log(nn) / nn;
}

Eigen::VectorXd correct_false_positives(const Eigen::VectorXd& rho_hat,
                                        double alpha, bool rescale) {
  require(alpha >= 0.0 && alpha < 1.0,
          "correct_false_positives: alpha must be in [0,1)");
  require((rho_hat.array() >= 0.0).all() && (rho_hat.array() <= 1.0).all(),
          "correct_false_positives: entries must be in [0,1]");
  Eigen::VectorXd out = rho_hat;
  for (int i = 0; i < out.size(); ++i) {
    if (out[i] <= alpha)
      out[i] = 0.0;
    else if (rescale)
      out[i] = (out[i] - alpha) / (1.0 - alpha);
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(20);
  const double lo = std::log(1e-4), hi = std::log(1.0);
  for (int i = 0; i < 20; ++i)
    grid[i] = std::exp(lo + (hi - lo) * i / 19.0);
  grid.back() = 1.0;
  return grid;
}

CvResult cross_validate_lambda_weighted(const DenoiseProblem& base,
                                        const CvConfig& cv,
                                        const SolverConfig& scfg) {
  check_problem(base);
  require(!cv.lambda_grid.empty(), "cross_validate_lambda: empty grid");
  for (size_t i = 0; i < cv.lambda_grid.size(); ++i) {
    require(std::isfinite(cv.lambda_grid[i]) && cv.lambda_grid[i] >= 0.0,
            "cross_validate_lambda: grid entries must be >= 0");
    require(i == 0 || cv.lambda_grid[i] > cv.lambda_grid[i - 1],
            "cross_validate_lambda: grid must be increasing");
  }
  require(cv.holdout_fraction > 0.0 && cv.holdout_fraction < 1.0,
          "cross_validate_lambda: holdout_fraction must be in (0,1)");
  require(cv.folds >= 1, "cross_validate_lambda: folds must be >= 1");

  std::vector<int> observed;
  for (int i = 0; i < base.graph->n; ++i)
    if (base.node_weights[i] > 0.0) observed.push_back(i);
  const int n_obs = static_cast<int>(observed.size());
  require(n_obs >= 2, "cross_validate_lambda: need at least 2 observed nodes");
  const int n_hide = std::max(
      1, static_cast<int>(std::ceil(cv.holdout_fraction * n_obs)));
  require(n_hide < n_obs, "cross_validate_lambda: fold with zero observed "
                          "nodes");

  const size_t ngrid = cv.lambda_grid.size();
  std::vector<double> loss(ngrid, 0.0);
  Rng root(cv.seed);
  for (int f = 0; f < cv.folds; ++f) {
    Rng rng = root.derive(f);
    std::vector<int> pool = observed;
    for (int i = 0; i < n_hide; ++i) {
      const std::uint64_t j = i + rng.uniform_int(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    Eigen::VectorXd a_fold = base.node_weights;
    for (int i = 0; i < n_hide; ++i) a_fold[pool[i]] = 0.0;

    TvSolver solver(*base.graph, a_fold, base.edge_weights);
    for (size_t gi = 0; gi < ngrid; ++gi) {
      const DenoiseResult res =
          solver.solve(base.targets, cv.lambda_grid[gi], scfg);
      double err = 0.0;
      for (int i = 0; i < n_hide; ++i) {
        const double d = base.targets[pool[i]] - res.p_hat[pool[i]];
        err += d * d;
      }
      loss[gi] += err;
    }
  }

  CvResult out;
  double best = std::numeric_limits<double>::infinity();
  for (size_t gi = 0; gi < ngrid; ++gi) {
    loss[gi] /= cv.folds;
    out.loss_table.emplace_back(cv.lambda_grid[gi], loss[gi]);
    if (loss[gi] <= best) {  // ties -> larger lambda
      best = loss[gi];
      out.lambda_star = cv.lambda_grid[gi];
    }
  }
  return out;
}

CvResult cross_validate_lambda(const Eigen::VectorXd& y,
                               const std::optional<Eigen::VectorXd>& mask,
                               const Graph& g, const CvConfig& cv,
                               const SolverConfig& scfg) {
  const DenoiseProblem base = mask ? make_masked_problem(y, *mask, g, 0.0)
                                   : make_uniform_problem(y, g, 0.0);
  return cross_validate_lambda_weighted(base, cv, scfg);
}

double resolve_lambda(const LambdaPolicy& policy, const Eigen::VectorXd& y,
                      const std::optional<Eigen::VectorXd>& mask,
                      const Graph& g, const SolverConfig& scfg) {
  switch (policy.kind) {
    case LambdaPolicy::Kind::fixed:
      return policy.lambda;
    case LambdaPolicy::Kind::theory:
      return theoretical_lambda(g.n, inverse_scaling_factor(g, RhoMode::bound),
                                policy.delta);
    case LambdaPolicy::Kind::theory_missing:
      return theoretical_lambda_missing(
          g.n, inverse_scaling_factor(g, RhoMode::bound));
    case LambdaPolicy::Kind::cv:
      return cross_validate_lambda(y, mask, g, policy.cv, scfg).lambda_star;
  }
  throw std::logic_error("resolve_lambda: unknown policy");
}

// ---------------------------------------------------------------------------
// Risk-bound calculators
// ---------------------------------------------------------------------------

namespace {

void check_bound_inputs(const RiskBoundInputs& in) {
  require(in.n >= 1, "risk bound: n must be >= 1");
  require(in.delta > 0.0 && in.delta <= 1.0,
          "risk bound: delta must be in (0,1]");
  require(in.rho >= 0.0 && in.t_size >= 0.0 && in.s_support >= 0.0 &&
              in.dp_tc_l1 >= 0.0 && in.dp_l0 >= 0.0,
          "risk bound: inputs must be nonnegative");
  if (in.t_size > 0.0 && in.s_support > 0.0)
    require(in.kappa_t > 0.0, "risk bound: kappa_t must be positive");
}

}  // namespace

double l1_risk_bound(const RiskBoundInputs& in) {
  check_bound_inputs(in);
  const double nn = static_cast<double>(in.n);
  const double log_n2 = std::log(4.0 * nn * nn / in.delta);
  const double log_4 = std::log(4.0 / in.delta);
  double total = 0.0;
  if (in.s_support > 0.0 && in.t_size > 0.0)
    total += 4.0 * in.rho * std::sqrt(in.s_support * in.t_size) / in.kappa_t *
             log_n2;
  total += 2.0 * in.s_support * std::sqrt(log_4 / nn);
  total += 3.0 * std::sqrt(in.rho * in.s_support * in.dp_tc_l1 * log_n2);
  total += std::sqrt(2.0) * in.rho * in.dp_l0 * log_n2;
  return total;
}

double l2_risk_bound(const RiskBoundInputs& in) {
  check_bound_inputs(in);
  const double nn = static_cast<double>(in.n);
  const double log_n2 = std::log(4.0 * nn * nn / in.delta);
  const double log_4 = std::log(4.0 / in.delta);
  double total = 0.0;
  if (in.t_size > 0.0)
    total += 16.0 * in.rho * in.rho * in.t_size * log_n2 * log_n2 /
             (in.kappa_t * in.kappa_t);
  total += 4.0 * std::sqrt(2.0) * in.rho * in.dp_tc_l1 * log_n2;
  total += 4.0 * in.s_support * log_4 / nn;
  return total;
}

double masked_l2_risk_bound(int n, const Eigen::VectorXd& pi, double rho,
                            double kappa_t, double t_size) {
  require(n >= 2, "masked risk bound: n must be >= 2");
  require(pi.size() == n, "masked risk bound: pi length != n");
  require((pi.array() > 0.0).all() && (pi.array() <= 1.0).all(),
          "masked risk bound: pi entries must be in (0,1]");
  require(t_size >= 0.0 && rho >= 0.0, "masked risk bound: negative input");
  const double nn = static_cast<double>(n);
  const double kappa_pi = 1.0 / pi.minCoeff();
  double bracket = pi.sum() * pi.cwiseInverse().sum() / (nn * nn);
  if (t_size > 0.0) {
    require(kappa_t > 0.0, "masked risk bound: kappa_t must be positive");
    bracket += rho * rho * kappa_pi * t_size / (kappa_t * kappa_t);
  }
  const double ln = std::log(nn);
  return bracket * ln * ln;
}

}  // namespace epinet
