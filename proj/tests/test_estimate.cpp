#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epinet/estimate.hpp"

using namespace epinet;

namespace {

Graph weighted_path(int n) {
  Graph g;
  g.n = n;
  for (int i = 0; i + 1 < n; ++i) {
    g.edges.emplace_back(i, i + 1);
    g.weights.push_back(0.5);
  }
  return g;
}

}  // namespace

TEST_CASE("build_phi") {
  const Graph g = weighted_path(2);
  const Eigen::SparseMatrix<double> omega = omega_from_graph(g);

  SUBCASE("all-zero trajectory gives an all-zero system") {
    std::vector<Eigen::VectorXd> traj(3, Eigen::VectorXd::Zero(2));
    const PhiSystem sys = build_phi(traj, omega);
    CHECK(sys.phi.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sys.delta_p.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single transition matches the hand formula") {
    Eigen::VectorXd p(2), q(2);
    p << 0.8, 0.2;
    q << 0.7, 0.35;
    const PhiSystem sys = build_phi({p, q}, omega);
    REQUIRE(sys.phi.rows() == 2);
    CHECK(sys.phi(0, 0) == doctest::Approx((1 - 0.8) * 0.5 * 0.2));
    CHECK(sys.phi(0, 1) == doctest::Approx(-0.8));
    CHECK(sys.phi(1, 0) == doctest::Approx((1 - 0.2) * 0.5 * 0.8));
    CHECK(sys.phi(1, 1) == doctest::Approx(-0.2));
    CHECK(sys.delta_p[0] == doctest::Approx(-0.1));
    CHECK(sys.delta_p[1] == doctest::Approx(0.15));
  }

  SUBCASE("row count law") {
    std::vector<Eigen::VectorXd> traj(7, Eigen::VectorXd::Constant(2, 0.1));
    CHECK(build_phi(traj, omega).phi.rows() == 2 * 6);
    CHECK_THROWS_AS(build_phi({traj[0]}, omega), std::invalid_argument);
  }
}

TEST_CASE("noiseless trajectories recover the generating rates exactly") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 6 + static_cast<int>(rng.uniform_int(20));
    Graph g = generate_graph(ErdosRenyi{0.3}, n, rng.next_u64());
    g = contact_weights(g);
    const double beta = 0.2 + 0.6 * rng.uniform();
    const double gamma = 0.05 + 0.4 * rng.uniform();
    EpidemicParams params;
    try {
      params = make_params(g, beta, gamma);
    } catch (const std::invalid_argument&) {
      continue;  // row condition violated for this draw
    }
    Rng prng = rng.derive(rep);
    const auto traj = simulate(random_patient_zero(n, prng), params, 8);
    const ParamEstimate est = estimate_params(build_phi(traj, params.omega));
    if (est.degenerate) continue;  // epidemic died instantly
    CHECK(est.beta_hat == doctest::Approx(beta).epsilon(1e-8));
    CHECK(est.gamma_hat == doctest::Approx(gamma).epsilon(1e-8));
    REQUIRE(est.r0_hat.has_value());
    CHECK(*est.r0_hat == doctest::Approx(beta / gamma).epsilon(1e-7));
    CHECK(est.residual_norm <= 1e-10);
  }
}

TEST_CASE("degenerate systems are flagged, not fatal") {
  const Graph g = weighted_path(3);
  const Eigen::SparseMatrix<double> omega = omega_from_graph(g);
  std::vector<Eigen::VectorXd> traj(4, Eigen::VectorXd::Zero(3));
  const ParamEstimate est = estimate_params(build_phi(traj, omega));
  CHECK(est.degenerate);
  CHECK(est.beta_hat == 0.0);
  CHECK(est.gamma_hat == 0.0);
  CHECK_FALSE(est.r0_hat.has_value());
}

TEST_CASE("least squares is invariant to common rescaling") {
  const Graph g = weighted_path(4);
  const EpidemicParams params = make_params(g, 0.4, 0.2);
  const auto traj = simulate(patient_zero_state(4, 1), params, 5);
  PhiSystem sys = build_phi(traj, params.omega);
  const ParamEstimate base = estimate_params(sys);
  sys.phi *= 7.5;
  sys.delta_p *= 7.5;
  const ParamEstimate scaled = estimate_params(sys);
  CHECK(std::abs(scaled.beta_hat - base.beta_hat) <= 1e-10);
  CHECK(std::abs(scaled.gamma_hat - base.gamma_hat) <= 1e-10);
}

TEST_CASE("reproductive number") {
  CHECK(reproductive_number(0.8, 0.1) == doctest::Approx(8.0));
  CHECK(reproductive_number(0.35, 0.1) == doctest::Approx(3.5));
  CHECK_THROWS_AS(reproductive_number(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(reproductive_number(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("estimation from observations") {
  Rng rng(17);
  const int n = 40;
  Graph g;
  while (true) {
    g = generate_graph(Knn{3}, n, rng.next_u64());
    if (is_connected(g)) break;
  }
  g = contact_weights(g);
  const EpidemicParams params = make_params(g, 0.5, 0.15);

  SUBCASE("feeding the exact states through lambda = 0 recovers the rates") {
    const auto traj = simulate(patient_zero_state(n, 0), params, 6);
    std::vector<ObservationSet> obs;
    for (int t = 2; t <= 6; ++t) {
      ObservationSet o;
      o.y = traj[t];
      o.mask = Eigen::VectorXd::Ones(n);
      obs.push_back(std::move(o));
    }
    LambdaPolicy policy;
    policy.kind = LambdaPolicy::Kind::fixed;
    policy.lambda = 0.0;
    const ObservationEstimate est =
        estimate_params_from_observations(obs, g, params.omega, policy);
    CHECK(est.lambda_used == 0.0);
    CHECK(est.tv.beta_hat == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(est.tv.gamma_hat == doctest::Approx(0.15).epsilon(1e-8));
    // lambda = 0 collapses the denoised path onto the naive one
    CHECK(est.naive.beta_hat == doctest::Approx(est.tv.beta_hat));
    CHECK(est.naive.gamma_hat == doctest::Approx(est.tv.gamma_hat));
  }

  SUBCASE("masked snapshots use the masked solver and zero-filled naive") {
    const auto traj = simulate(patient_zero_state(n, 0), params, 5);
    std::vector<ObservationSet> obs;
    Rng orng(5);
    for (int t = 3; t <= 5; ++t) {
      ObservationSet o;
      o.y = sample_observations(traj[t], 0.0, orng);
      o.mask = sample_mask(Eigen::VectorXd::Constant(n, 0.8), orng);
      obs.push_back(std::move(o));
    }
    LambdaPolicy policy;
    policy.kind = LambdaPolicy::Kind::fixed;
    policy.lambda = 0.01;
    const ObservationEstimate est =
        estimate_params_from_observations(obs, g, params.omega, policy);
    CHECK(std::isfinite(est.tv.beta_hat));
    CHECK(std::isfinite(est.naive.beta_hat));
  }
}
