#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lqgh/instances.hpp"
#include "lqgh/lqg.hpp"

using namespace lqgh;

namespace {

std::mt19937 rng(4242);

Matrix random_matrix(int r, int c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Matrix random_spd(int n) {
  Matrix m = random_matrix(n, n);
  return Matrix(m * m.transpose() + 0.5 * Matrix::Identity(n, n));
}

PlantInstance random_plant(int n, int du, int dy) {
  Matrix a = random_matrix(n, n);
  a *= 0.9 / std::max(1e-12, spectral_radius(a));
  return PlantInstance(a, random_matrix(n, du), random_matrix(dy, n),
                       random_spd(n), random_spd(dy), random_spd(n),
                       random_spd(du));
}

double control_riccati_residual(const PlantInstance& p, const LqgSolution& s) {
  Matrix res = p.A.transpose() * s.P * p.A - s.P -
               p.A.transpose() * s.P * p.B *
                   s.Psi.ldlt().solve(p.B.transpose() * s.P * p.A) +
               p.Q;
  return res.norm() / std::max(1.0, s.P.norm());
}

double filter_riccati_residual(const PlantInstance& p, const LqgSolution& s) {
  Matrix res = p.A * s.Sigma * p.A.transpose() - s.Sigma -
               p.A * s.Sigma * p.C.transpose() *
                   s.Sigma_e.ldlt().solve(p.C * s.Sigma * p.A.transpose()) +
               p.Sigma_w;
  return res.norm() / std::max(1.0, s.Sigma.norm());
}

}  // namespace

TEST_CASE("synthesis satisfies both Riccati equations on the catalog") {
  for (const char* name :
       {"doyle", "doyle_stable", "doyle_fully_observed", "nmp", "compounding",
        "tradeoffs", "pe_loss"}) {
    CAPTURE(name);
    CatalogEntry e = catalog(name, name[0] == 'n' ? 0.1 : 1e-2);
    PlantInstance p = e.nominal();
    LqgSolution s = synthesize(p);
    CHECK(control_riccati_residual(p, s) <= 1e-10);
    CHECK(filter_riccati_residual(p, s) <= 1e-10);
    CHECK(spectral_radius(s.A_cl_c) < 1.0);
    CHECK(spectral_radius(s.A_cl_o) < 1.0);
  }
}

TEST_CASE("optimal cost equals the trace identity") {
  // J* = tr(P Sigma_w) + tr(Psi F Sigma F') for the predictor-form LQG.
  for (int trial = 0; trial < 10; ++trial) {
    PlantInstance p = random_plant(3, 2, 2);
    LqgSolution s = synthesize(p);
    const double algebraic =
        (s.P * p.Sigma_w).trace() +
        (s.Psi * s.F * s.Sigma * s.F.transpose()).trace();
    CHECK(s.J_star == doctest::Approx(algebraic).epsilon(1e-9));
  }
}

TEST_CASE("optimal controller is the cost minimizer among perturbations") {
  PlantInstance p = random_plant(3, 1, 1);
  LqgSolution s = synthesize(p);
  LinearController k = lqg_controller(s, p);
  const double j0 = evaluate_cost(p, k);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    LinearController kp = k;
    kp.realization.C += 0.05 * random_matrix(1, 3);
    try {
      CHECK(evaluate_cost(p, kp) >= j0 - 1e-9 * (1.0 + j0));
    } catch (const ClosedLoopUnstable&) {
      // perturbation destabilized the loop; also consistent with optimality
    }
  }
}

TEST_CASE("cost is invariant under plant similarity transforms") {
  PlantInstance p = random_plant(3, 2, 2);
  Matrix T = random_matrix(3, 3);
  while (std::abs(T.determinant()) < 0.3) T = random_matrix(3, 3);
  Matrix Ti = T.inverse();
  PlantInstance q(T * p.A * Ti, T * p.B, p.C * Ti, T * p.Sigma_w * T.transpose(),
                  p.Sigma_v, Ti.transpose() * p.Q * Ti, p.R);
  CHECK(synthesize(p).J_star ==
        doctest::Approx(synthesize(q).J_star).epsilon(1e-7));
}

TEST_CASE("NMP Kalman gain identity holds exactly") {
  const double xi = 0.01;
  CatalogEntry e = nmp(xi);
  LqgSolution s = synthesize(e.nominal());
  const double p2 = s.Sigma(1, 1);
  const double se = std::sqrt(s.Sigma_e(0, 0));
  CHECK(std::abs(s.L(0, 0) + p2 / se) <= 1e-12 * std::abs(s.L(0, 0)));
  CHECK(std::abs(s.L(1, 0) + 1.0 / se) <= 1e-12);
}

TEST_CASE("evaluate_cost rejects destabilizing controllers") {
  CatalogEntry e = doyle(1e-3);
  PlantInstance p = e.nominal();
  LinearController zero;
  zero.realization = StateSpaceTF::zero(p.du(), p.dy());
  // doyle plant is open-loop unstable, so K = 0 destabilizes it
  CHECK_THROWS_AS(evaluate_cost(p, zero), ClosedLoopUnstable);
}

TEST_CASE("closed-loop map of K = 0 on a stable plant is [[I,0],[P,I]]") {
  PlantInstance p = random_plant(3, 2, 2);
  LinearController zero;
  zero.realization = StateSpaceTF::zero(p.du(), p.dy());
  StateSpaceTF tk = closed_loop_map_TK(p, zero);
  StateSpaceTF pu(p.A, p.B, p.C, Matrix::Zero(p.dy(), p.du()));
  for (int k = 0; k < 32; ++k) {
    const double w = 2.0 * M_PI * k / 32;
    Eigen::MatrixXcd expected = Eigen::MatrixXcd::Identity(4, 4);
    expected.bottomLeftCorner(2, 2) = pu.eval(w);
    CHECK((tk.eval(w) - expected).norm() <= 1e-9);
  }
}

TEST_CASE("closed-loop map with the optimal controller is stable and consistent") {
  PlantInstance p = random_plant(3, 2, 2);
  LqgSolution s = synthesize(p);
  LinearController k = lqg_controller(s, p);
  StateSpaceTF tk = closed_loop_map_TK(p, k);
  CHECK(spectral_radius(tk.A) < 1.0);
  // Block (0,1) of T_K is K (I - P K)^{-1}: check the identity
  // T_K[0,:] = [I + K*y_part ...] via direct frequency algebra instead:
  StateSpaceTF pu(p.A, p.B, p.C, Matrix::Zero(p.dy(), p.du()));
  for (int kk = 0; kk < 16; ++kk) {
    const double w = 2.0 * M_PI * kk / 16;
    Eigen::MatrixXcd Kw = k.realization.eval(w);
    Eigen::MatrixXcd Pw = pu.eval(w);
    Eigen::MatrixXcd S =
        (Eigen::MatrixXcd::Identity(p.dy(), p.dy()) - Pw * Kw).inverse();
    Eigen::MatrixXcd expected(p.du() + p.dy(), p.du() + p.dy());
    expected.topLeftCorner(p.du(), p.du()) =
        Eigen::MatrixXcd::Identity(p.du(), p.du()) + Kw * S * Pw;
    expected.topRightCorner(p.du(), p.dy()) = Kw * S;
    expected.bottomLeftCorner(p.dy(), p.du()) = S * Pw;
    expected.bottomRightCorner(p.dy(), p.dy()) = S;
    CHECK((tk.eval(w) - expected).norm() <= 1e-8);
  }
}

TEST_CASE("plant JSON round trip") {
  PlantInstance p = random_plant(3, 2, 2);
  PlantInstance q = PlantInstance::from_json(p.to_json());
  CHECK((p.A - q.A).norm() <= 1e-15);
  CHECK((p.Sigma_w - q.Sigma_w).norm() <= 1e-15);
  CHECK((p.R - q.R).norm() <= 1e-15);
}

TEST_CASE("invalid plants are rejected") {
  Matrix A = Matrix::Identity(2, 2);
  Matrix B(2, 1);
  B << 0, 1;
  Matrix C(1, 2);
  C << 1, 0;
  Matrix I2 = Matrix::Identity(2, 2), I1 = Matrix::Identity(1, 1);
  // Non-symmetric covariance.
  Matrix bad = I2;
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(PlantInstance(A, B, C, bad, I1, I2, I1), SolverError);
  // Negative definite R.
  CHECK_THROWS_AS(PlantInstance(A, B, C, I2, I1, I2, Matrix(-I1)), SolverError);
  // Unstabilizable pair.
  Matrix A2 = Matrix::Zero(2, 2);
  A2(0, 0) = 2.0;
  A2(1, 1) = 0.5;
  Matrix B2(2, 1);
  B2 << 0, 1;
  CHECK_THROWS_AS(PlantInstance(A2, B2, Matrix(Matrix::Identity(2, 2)), I2, I2,
                                I2, I1),
                  SolverError);
  CHECK_THROWS_AS(PlantInstance::from_json("{not json"), InvalidInstance);
}
