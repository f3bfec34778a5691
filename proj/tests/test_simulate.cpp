#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "lqgh/instances.hpp"
#include "lqgh/simulate.hpp"

using namespace lqgh;

namespace {

struct PolicySetup {
  PlantInstance plant;
  LqgSolution sol;
  ExplorationPolicy policy;
  ParametricFamily family;
  double theta_star;
};

PolicySetup doyle_setup(double sigma, double eta) {
  CatalogEntry e = doyle(sigma);
  PolicySetup s{e.nominal(), {}, {}, e.family, e.theta_star};
  s.sol = synthesize(s.plant);
  s.policy = ExplorationPolicy::optimal_lqg(s.plant, s.sol, eta);
  return s;
}

// Straightforward scalar reimplementation of the average negative
// log-likelihood, trajectory by trajectory.
double nll_reference(const Dataset& data, const ParametricFamily& family,
                     double theta) {
  PlantInstance p = family.at(theta);
  LqgSolution s = synthesize(p);
  Matrix Sei = s.Sigma_e.inverse();
  double logdet = std::log(s.Sigma_e.determinant());
  double quad = 0.0;
  for (int j = 0; j < data.N; ++j) {
    Vector xhat = Vector::Zero(p.n());
    for (int t = 0; t < data.T; ++t) {
      Vector y = data.Y[t].col(j);
      Vector u = data.U[t].col(j);
      Vector innov = y - p.C * xhat;
      quad += innov.dot(Sei * innov);
      xhat = p.A * xhat + p.B * u + s.L * innov;
    }
  }
  return 0.5 * quad / data.N + 0.5 * data.T * logdet;
}

}  // namespace

TEST_CASE("counter RNG is a pure function of its counters") {
  CounterRng r1{42}, r2{42}, r3{43};
  CHECK(r1.normal(1, 2, 3, 0, 0) == r2.normal(1, 2, 3, 0, 0));
  CHECK(r1.normal(1, 2, 3, 0, 0) != r3.normal(1, 2, 3, 0, 0));
  CHECK(r1.normal(1, 2, 3, 0, 0) != r1.normal(1, 2, 3, 0, 1));
  CHECK(r1.normal(1, 2, 3, 1, 0) != r1.normal(1, 2, 3, 2, 0));
  // Roughly standard normal.
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = r1.normal(0, 0, i, 0, 0);
    mean += x / n;
    var += x * x / n;
  }
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("simulation re-runs are bit-identical") {
  PolicySetup s = doyle_setup(0.25, 1.0);
  Dataset d1 = simulate(s.plant, s.policy, 7, 50, 999, 3);
  Dataset d2 = simulate(s.plant, s.policy, 7, 50, 999, 3);
  REQUIRE(d1.Y.size() == d2.Y.size());
  for (int t = 0; t < d1.T; ++t) {
    CHECK((d1.Y[t] - d2.Y[t]).norm() == 0.0);
    CHECK((d1.U[t] - d2.U[t]).norm() == 0.0);
  }
  CHECK(d1.to_csv() == d2.to_csv());
  // Different replicate index -> different data.
  Dataset d3 = simulate(s.plant, s.policy, 7, 50, 999, 4);
  CHECK((d1.Y[0] - d3.Y[0]).norm() != 0.0);
}

TEST_CASE("stationary sample covariance matches the Lyapunov prediction") {
  PolicySetup s = doyle_setup(0.25, 0.0);
  const int N = 4000, T = 60;
  Dataset d = simulate(s.plant, s.policy, N, T, 1234);
  // Innovation-form closed loop: y_t = C xhat_t + e_t with xhat the predictor
  // state; stationary cov(y) = C Sigma_hat C' + Sigma_e with
  // Sigma_hat = dlyap(A + BF, L Sigma_e L').
  Matrix Acl = s.plant.A + s.plant.B * s.sol.F;
  Matrix Sh = solve_dlyap(
      Acl, Matrix(s.sol.L * s.sol.Sigma_e * s.sol.L.transpose()));
  Matrix cov_pred = s.plant.C * Sh * s.plant.C.transpose() + s.sol.Sigma_e;
  Matrix emp = Matrix::Zero(1, 1);
  int count = 0;
  for (int t = T / 2; t < T; ++t) {
    emp += d.Y[t] * d.Y[t].transpose() / N;
    ++count;
  }
  emp /= count;
  CHECK(std::abs(emp(0, 0) - cov_pred(0, 0)) <= 0.05 * cov_pred(0, 0));
}

TEST_CASE("vectorized likelihood matches the scalar reference") {
  PolicySetup s = doyle_setup(0.25, 1.0);
  Dataset d = simulate(s.plant, s.policy, 5, 40, 77);
  for (double theta : {0.8, 1.0, 1.2}) {
    const double fast = nll(d, s.family, scalar_theta(theta));
    const double ref = nll_reference(d, s.family, theta);
    CHECK(fast == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("likelihood quadratic term is chi-square on average") {
  // At the true parameter the innovations are iid N(0, Sigma_e), so
  // 2*nll - T log|Sigma_e| has mean dy*T.
  PolicySetup s = doyle_setup(0.25, 0.0);
  const int N = 2000, T = 50;
  Dataset d = simulate(s.plant, s.policy, N, T, 4321);
  LqgSolution sol = synthesize(s.family.at(s.theta_star));
  const double logdet = std::log(sol.Sigma_e.determinant());
  const double quad = 2.0 * (nll(d, s.family, scalar_theta(s.theta_star)) -
                             0.5 * T * logdet);
  CHECK(std::abs(quad - T) <= 0.05 * T);  // dy = 1
}

TEST_CASE("MLE is consistent on a well-specified instance") {
  PolicySetup s = doyle_setup(0.25, 0.0);
  Dataset d = simulate(s.plant, s.policy, 400, 400, 2024);
  MleResult m = mle_scalar(d, s.family, 0.5, 1.5);
  CHECK_FALSE(m.at_boundary);
  CHECK(std::abs(m.theta_hat - 1.0) <= 0.05);
  // The estimate sits at an interior minimum of the likelihood.
  const double at_hat = nll(d, s.family, scalar_theta(m.theta_hat));
  CHECK(at_hat <= nll(d, s.family, scalar_theta(m.theta_hat + 1e-3)));
  CHECK(at_hat <= nll(d, s.family, scalar_theta(m.theta_hat - 1e-3)));
}

TEST_CASE("empirical Fisher matches the analytic finite-T value") {
  PolicySetup s = doyle_setup(0.25, 0.0);
  const int T = 100;
  const double analytic = fisher_finite_T(s.family, scalar_theta(1.0),
                                          s.policy, Vector::Ones(1), T);
  const double empirical =
      empirical_fisher(s.family, scalar_theta(1.0), s.policy, T, 2000, 555);
  CHECK(std::abs(empirical - analytic) <= 0.05 * analytic);
}

TEST_CASE("CE pipeline aggregates deterministically and matches theory order") {
  PolicySetup s = doyle_setup(0.25, 0.0);
  CePipelineResult r1 =
      ce_pipeline(s.family, 1.0, s.policy, 25, 200, 40, 314159);
  CePipelineResult r2 =
      ce_pipeline(s.family, 1.0, s.policy, 25, 200, 40, 314159);
  CHECK(r1.to_json() == r2.to_json());
  CHECK(r1.failures == 0);
  CHECK(r1.mean_excess > 0.0);
  for (double e : r1.excess) CHECK(e >= 0.0);
  // Different seed gives different draws.
  CePipelineResult r3 =
      ce_pipeline(s.family, 1.0, s.policy, 25, 200, 40, 271828);
  CHECK(r1.to_json() != r3.to_json());
}

TEST_CASE("thread cap respects the environment variable") {
  setenv("LQGH_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  unsetenv("LQGH_THREADS");
  CHECK(thread_cap() >= 1);
}

TEST_CASE("parallelism does not change pipeline output") {
  PolicySetup s = doyle_setup(0.25, 0.0);
  setenv("LQGH_THREADS", "1", 1);
  CePipelineResult a = ce_pipeline(s.family, 1.0, s.policy, 10, 100, 12, 99);
  setenv("LQGH_THREADS", "4", 1);
  CePipelineResult b = ce_pipeline(s.family, 1.0, s.policy, 10, 100, 12, 99);
  unsetenv("LQGH_THREADS");
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("CSV export carries full precision") {
  PolicySetup s = doyle_setup(0.25, 1.0);
  Dataset d = simulate(s.plant, s.policy, 2, 3, 1);
  std::string csv = d.to_csv();
  CHECK(csv.find("trajectory") != std::string::npos);
  // 17 significant digits means at least 16 characters in a typical value.
  CHECK(csv.size() > 100);
}
