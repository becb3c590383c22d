#include "epinet/estimate.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace epinet {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

PhiSystem build_phi(const std::vector<Eigen::VectorXd>& trajectory,
                    const Eigen::SparseMatrix<double>& omega) {
  require(trajectory.size() >= 2, "build_phi: need at least two states");
  const int n = static_cast<int>(trajectory[0].size());
  require(omega.rows() == n && omega.cols() == n,
          "build_phi: omega shape mismatch");
  const int transitions = static_cast<int>(trajectory.size()) - 1;
  PhiSystem sys;
  sys.phi.resize(static_cast<Eigen::Index>(n) * transitions, 2);
  sys.delta_p.resize(static_cast<Eigen::Index>(n) * transitions);
  for (int t = 0; t < transitions; ++t) {
    const Eigen::VectorXd& p = trajectory[t];
    require(p.size() == n && trajectory[t + 1].size() == n,
            "build_phi: inconsistent state lengths");
    const Eigen::VectorXd pressure = omega * p;
    for (int i = 0; i < n; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(t) * n + i;
      sys.phi(row, 0) = (1.0 - p[i]) * pressure[i];
      sys.phi(row, 1) = -p[i];
      sys.delta_p[row] = trajectory[t + 1][i] - p[i];
    }
    sys.times_used.push_back(t);
  }
  return sys;
}

ParamEstimate estimate_params(const PhiSystem& system) {
  require(system.phi.rows() > 0 && system.phi.cols() == 2,
          "estimate_params: empty system");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      system.phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv(0);

  ParamEstimate est;
  est.degenerate = !(sv(0) > 0.0) || sv(1) <= cutoff;

  // Minimum-norm least squares with the cutoff applied by hand.
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < 2; ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  const Eigen::Vector2d x = svd.matrixV() * inv.asDiagonal() *
                            svd.matrixU().transpose() * system.delta_p;
  est.beta_hat = x(0);
  est.gamma_hat = x(1);
  est.residual_norm = (system.phi * x - system.delta_p).norm();
  if (!est.degenerate && est.gamma_hat > 0.0)
    est.r0_hat = est.beta_hat / est.gamma_hat;
  return est;
}

double reproductive_number(double beta_hat, double gamma_hat) {
  require(gamma_hat > 0.0, "reproductive_number: gamma_hat must be > 0");
  return beta_hat / gamma_hat;
}

ObservationEstimate estimate_params_from_observations(
    const std::vector<ObservationSet>& observations, const Graph& g,
    const Eigen::SparseMatrix<double>& omega, const LambdaPolicy& policy,
    const SolverConfig& scfg) {
  require(observations.size() >= 2,
          "estimate_params_from_observations: need at least two snapshots");
  for (const auto& obs : observations) {
    require(obs.y.size() == g.n,
            "estimate_params_from_observations: snapshot length != n");
    require(obs.mask.size() == 0 || obs.mask.size() == g.n,
            "estimate_params_from_observations: mask length != n");
  }

  auto masked = [&](const ObservationSet& obs) {
    return obs.mask.size() == g.n && obs.mask.minCoeff() < 1.0;
  };

  ObservationEstimate out;
  {
    const ObservationSet& last = observations.back();
    const std::optional<Eigen::VectorXd> mask =
        masked(last) ? std::optional<Eigen::VectorXd>(last.mask)
                     : std::nullopt;
    out.lambda_used = resolve_lambda(policy, last.y, mask, g, scfg);
  }

  std::vector<Eigen::VectorXd> denoised, raw;
  denoised.reserve(observations.size());
  raw.reserve(observations.size());
  for (const auto& obs : observations) {
    DenoiseResult res =
        masked(obs)
            ? tv_denoise_masked(obs.y, obs.mask, g, out.lambda_used, scfg)
            : tv_denoise(obs.y, g, out.lambda_used, scfg);
    out.all_converged = out.all_converged && res.converged;
    denoised.push_back(std::move(res.p_hat));
    raw.push_back(masked(obs) ? obs.mask.cwiseProduct(obs.y).eval() : obs.y);
  }

  out.tv = estimate_params(build_phi(denoised, omega));
  out.naive = estimate_params(build_phi(raw, omega));
  return out;
}

}  // namespace epinet
