#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lqgh/hardness.hpp"
#include "lqgh/instances.hpp"

using namespace lqgh;

namespace {

std::mt19937 rng(31415);

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

ParametricFamily random_family(int n, int du, int dy) {
  Matrix a = random_matrix(n, n);
  a *= 0.85 / std::max(1e-12, spectral_radius(a));
  Matrix b = random_matrix(n, du), c = random_matrix(dy, n);
  Matrix sw = random_spd(n), sv = random_spd(dy);
  Matrix q = random_spd(n), r = random_spd(du);
  Matrix da = 0.1 * random_matrix(n, n), db = 0.1 * random_matrix(n, du);
  Matrix dc = 0.1 * random_matrix(dy, n);

  ParametricFamily fam;
  fam.dim = 1;
  fam.eval = [=](const Vector& th) {
    const double t = th(0);
    return PlantInstance(a + t * da, b + t * db, c + t * dc, sw, sv, q, r);
  };
  fam.derivative = [=](const Vector&, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = v(0) * da;
    d.B_dot = v(0) * db;
    d.C_dot = v(0) * dc;
    d.Sigma_w_dot = Matrix::Zero(n, n);
    d.Sigma_v_dot = Matrix::Zero(dy, dy);
    return d;
  };
  return fam;
}

// Second central difference of the certainty-equivalence cost map
// theta -> J(K(theta), plant(theta_0)).
double hessian_fd_oracle(const ParametricFamily& fam, double theta0,
                         double h) {
  PlantInstance truth = fam.at(theta0);
  auto ce = [&](double t) {
    PlantInstance model = fam.at(t);
    LqgSolution s = synthesize(model);
    return evaluate_cost(truth, lqg_controller(s, model));
  };
  return (ce(theta0 + h) - 2.0 * ce(theta0) + ce(theta0 - h)) / (h * h);
}

}  // namespace

TEST_CASE("strict Hessian matches the finite-difference CE-cost oracle") {
  // Moderate catalog instances plus random families.
  {
    CatalogEntry e = doyle(1e-2);
    double H = hessian_form_strict(e.family, scalar_theta(1.0), Vector::Ones(1));
    double fd = hessian_fd_oracle(e.family, 1.0, 1e-5);
    CHECK(std::abs(H - fd) <= 1e-3 * std::abs(fd));
  }
  {
    CatalogEntry e = nmp(0.1);
    double H = hessian_form_strict(e.family, scalar_theta(0.0), Vector::Ones(1));
    double fd = hessian_fd_oracle(e.family, 0.0, 3e-6);
    CHECK(std::abs(H - fd) <= 1e-3 * std::abs(fd));
  }
  int tested = 0;
  for (int trial = 0; trial < 20 && tested < 6; ++trial) {
    ParametricFamily fam = random_family(2 + trial % 2, 1, 1);
    double H, fd;
    try {
      H = hessian_form_strict(fam, scalar_theta(0.0), Vector::Ones(1));
      fd = hessian_fd_oracle(fam, 0.0, 1e-4);
    } catch (const SolverError&) {
      continue;
    }
    if (std::abs(fd) < 1e-6) continue;  // curvature too small to resolve
    ++tested;
    CAPTURE(trial);
    CHECK(std::abs(H - fd) <= 1e-3 * std::abs(fd));
  }
  CHECK(tested >= 4);
}

TEST_CASE("Hessian form is nonnegative and quadratic in v") {
  ParametricFamily fam = random_family(3, 2, 2);
  Vector theta = scalar_theta(0.0), v = Vector::Ones(1);
  const double h1 = hessian_form_strict(fam, theta, v);
  const double h3 = hessian_form_strict(fam, theta, Vector(3.0 * v));
  CHECK(h1 >= 0.0);
  CHECK(h3 == doctest::Approx(9.0 * h1).epsilon(1e-9));
}

TEST_CASE("doyle Hessian constant") {
  Vector v = Vector::Ones(1);
  double prev = 0.0;
  for (double sigma : {1e-3, 1e-4, 1e-5}) {
    CatalogEntry e = doyle(sigma);
    const double H = hessian_form_strict(e.family, scalar_theta(1.0), v);
    const double scaled = H * std::pow(sigma, 1.5);
    CHECK(scaled > 2048.0);  // approaches the constant from above
    if (prev > 0.0) CHECK(scaled < prev);
    prev = scaled;
    if (sigma == 1e-5) CHECK(std::abs(scaled - 2048.0) <= 0.10 * 2048.0);
  }
}

TEST_CASE("stable-variant and LQR Hessian constants") {
  Vector v = Vector::Ones(1);
  {
    CatalogEntry e = doyle_stable(1e-5);
    const double H = hessian_form_strict(e.family, scalar_theta(1.0), v);
    CHECK(std::abs(H * std::pow(1e-5, 1.5) - 2.53) <= 0.15 * 2.53);
  }
  {
    CatalogEntry e = doyle_fully_observed(1e-6);
    const double H = hessian_lqr(e.family, scalar_theta(1.0), v);
    CHECK(std::abs(H * std::sqrt(1e-6) - 9.0) <= 0.10 * 9.0);
  }
}

TEST_CASE("causal Hessian is between zero and the strict one on doyle") {
  CatalogEntry e = doyle(1e-3);
  Vector v = Vector::Ones(1);
  const double hs = hessian_form_strict(e.family, scalar_theta(1.0), v);
  const double hc = hessian_form_causal(e.family, scalar_theta(1.0), v);
  CHECK(hc > 0.0);
  CHECK(hc <= hs * (1.0 + 1e-9));
}

TEST_CASE("causal and LQR Hessians match their finite-difference oracles") {
  // Causal CE map: the controller uses the filtered estimate x_{t|t} of the
  // model at theta, so both the gain and the filter depend on theta.
  Vector v = Vector::Ones(1);
  CatalogEntry e = doyle_fully_observed(1e-2);
  PlantInstance truth = e.nominal();
  auto causal_ce = [&](double t) {
    PlantInstance m = e.family.at(t);
    LqgSolution s = synthesize(m);
    Matrix Lbar = s.Sigma * m.C.transpose() * s.Sigma_e.inverse();
    Matrix ILC = Matrix::Identity(m.n(), m.n()) - Lbar * m.C;
    Matrix Acl = m.A + m.B * s.F;
    LinearController k;
    k.realization = StateSpaceTF(Acl * ILC, Acl * Lbar, s.F * ILC,
                                 Matrix(s.F * Lbar));
    k.strictly_proper = false;
    return evaluate_cost(truth, k);
  };
  auto lqr_ce = [&](double t) {
    LqgSolution s = synthesize(e.family.at(t));
    LinearController k;
    k.realization = StateSpaceTF::static_gain(s.F);
    k.strictly_proper = false;
    return evaluate_cost(truth, k);
  };
  const double h = 1e-5;
  const double fd_causal =
      (causal_ce(1.0 + h) - 2.0 * causal_ce(1.0) + causal_ce(1.0 - h)) /
      (h * h);
  const double fd_lqr =
      (lqr_ce(1.0 + h) - 2.0 * lqr_ce(1.0) + lqr_ce(1.0 - h)) / (h * h);
  const double hc = hessian_form_causal(e.family, scalar_theta(1.0), v);
  const double hl = hessian_lqr(e.family, scalar_theta(1.0), v);
  CHECK(std::abs(hc - fd_causal) <= 1e-3 * fd_causal);
  CHECK(std::abs(hl - fd_lqr) <= 1e-3 * fd_lqr);
  // The causal map carries the filter's parameter sensitivity on top of the
  // gain's, so its curvature dominates the pure state-feedback one.
  CHECK(hc >= hl);
}

TEST_CASE("Table I constants at s = 1000") {
  const double s = 1000.0;
  CatalogEntry e = compounding(s);
  Vector theta = scalar_theta(1.0), v = Vector::Ones(1);
  LqgSolution sol = synthesize(e.nominal());
  CHECK(std::abs(sol.J_star - 28.0) <= 0.05 * 28.0);
  const double H = hessian_form_strict(e.family, theta, v);
  CHECK(std::abs(H / s - 86.0) <= 0.10 * 86.0);
  const double expected[] = {18.6, 20.4, 194.0, 17600.0};
  const double etas[] = {0.0, 1.0, 10.0, 100.0};
  for (int i = 0; i < 4; ++i) {
    const double fi = fisher_rate_optimal_policy(e.family, theta, etas[i], v);
    CHECK(std::abs(fi * s * s - expected[i]) <= 0.10 * expected[i]);
  }
}

TEST_CASE("general Fisher rate equals the optimal-policy specialization") {
  for (const char* name : {"doyle", "compounding"}) {
    CAPTURE(name);
    CatalogEntry e = catalog(name, name[0] == 'd' ? 1e-2 : 10.0);
    Vector theta = scalar_theta(e.theta_star), v = Vector::Ones(1);
    PlantInstance p = e.nominal();
    LqgSolution sol = synthesize(p);
    for (double eta : {0.0, 1.0}) {
      ExplorationPolicy pol = ExplorationPolicy::optimal_lqg(p, sol, eta);
      const double general = fisher_rate(e.family, theta, pol, v);
      const double special =
          fisher_rate_optimal_policy(e.family, theta, eta, v);
      CHECK(general == doctest::Approx(special).epsilon(1e-9));
    }
  }
}

TEST_CASE("finite-horizon information converges to the rate") {
  CatalogEntry e = doyle(1e-2);
  Vector theta = scalar_theta(1.0), v = Vector::Ones(1);
  PlantInstance p = e.nominal();
  LqgSolution sol = synthesize(p);
  ExplorationPolicy pol = ExplorationPolicy::optimal_lqg(p, sol, 1.0);
  const double rate = fisher_rate(e.family, theta, pol, v);
  const double fi_T = fisher_finite_T(e.family, theta, pol, v, 2000);
  CHECK(std::abs(fi_T / 2000.0 - rate) <= 0.01 * rate);
  // Monotone growth in T.
  double prev = fisher_finite_T(e.family, theta, pol, v, 10);
  for (int T : {20, 50, 100}) {
    const double cur = fisher_finite_T(e.family, theta, pol, v, T);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("one-step information contains only the Sigma_e term") {
  CatalogEntry e = doyle(1e-2);
  Vector theta = scalar_theta(1.0), v = Vector::Ones(1);
  PlantInstance p = e.nominal();
  LqgSolution sol = synthesize(p);
  ExplorationPolicy pol = ExplorationPolicy::optimal_lqg(p, sol, 0.0);
  GainDerivatives g = directional_derivatives(e.family, theta, v);
  const double expected =
      0.5 *
      (sol.Sigma_e.ldlt().solve(g.Sigma_e_dot) *
       sol.Sigma_e.ldlt().solve(g.Sigma_e_dot))
          .trace();
  CHECK(fisher_finite_T(e.family, theta, pol, v, 1) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("polarized matrices are symmetric and match the quadratic forms") {
  ParametricFamily fam2 = random_family(3, 1, 1);
  Matrix H1 = hessian_matrix(fam2, scalar_theta(0.0));
  CHECK(H1.rows() == 1);
  CHECK(H1(0, 0) ==
        doctest::Approx(hessian_form_strict(fam2, scalar_theta(0.0),
                                            Vector::Ones(1)))
            .epsilon(1e-12));
  PlantInstance p = fam2.at(0.0);
  LqgSolution sol = synthesize(p);
  ExplorationPolicy pol = ExplorationPolicy::optimal_lqg(p, sol, 1.0);
  Matrix FI = fisher_matrix(fam2, scalar_theta(0.0), pol);
  CHECK(FI(0, 0) == doctest::Approx(fisher_rate(fam2, scalar_theta(0.0), pol,
                                                Vector::Ones(1)))
                        .epsilon(1e-12));
}

TEST_CASE("NMP joint sensitivity covariance reaches its asymptote") {
  // The scaled bottom-right block converges to 2 as xi -> 0; by xi = 1e-3
  // the truncation error is a few percent.
  const double xi = 1e-3;
  CatalogEntry e = nmp(xi);
  PlantInstance p = e.nominal();
  LqgSolution s = synthesize(p);
  Vector theta = scalar_theta(0.0), v = Vector::Ones(1);
  GainDerivatives gd = directional_derivatives(e.family, theta, v);
  PlantDerivatives pd = e.family.plant_derivatives(theta, v);
  const int n = 2;
  Matrix Aj = Matrix::Zero(2 * n, 2 * n);
  Aj.topLeftCorner(n, n) = s.A_cl_c;
  Aj.bottomLeftCorner(n, n) = pd.A_dot - s.L * pd.C_dot + pd.B_dot * s.F;
  Aj.bottomRightCorner(n, n) = s.A_cl_o;
  Matrix Bj(2 * n, 1);
  Bj.topRows(n) = s.L;
  Bj.bottomRows(n) = gd.L_dot;
  Matrix Sh = solve_dlyap(Aj, Matrix(Bj * s.Sigma_e * Bj.transpose()));
  Matrix br = Sh.bottomRightCorner(n, n);
  CHECK(std::abs(br(0, 0) * std::pow(xi, 7) - 2.0) <= 0.15 * 2.0);
  CHECK(std::abs(br(1, 1) * std::pow(xi, 5) - 2.0) <= 0.15 * 2.0);
}

TEST_CASE("hardness report composes bound and warnings") {
  CatalogEntry e = doyle(1e-3);
  PlantInstance p = e.nominal();
  LqgSolution sol = synthesize(p);
  ExplorationPolicy pol = ExplorationPolicy::optimal_lqg(p, sol, 0.0);
  HardnessReport rep = hardness_report(e.family, scalar_theta(1.0), pol,
                                       100, 500);
  CHECK(rep.bound > 0.0);
  const double expected =
      (rep.H * (500.0 * rep.FI_rate).inverse()).trace() / (4.0 * 100);
  CHECK(rep.bound == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rep.ce_asymptote == doctest::Approx(2.0 * rep.bound).epsilon(1e-12));
  CHECK(rep.J_star == doctest::Approx(sol.J_star).epsilon(1e-12));
  CHECK_FALSE(rep.FI_finite_T.has_value());

  HardnessReport rep2 = hardness_report(e.family, scalar_theta(1.0), pol,
                                        100, 500, true);
  REQUIRE(rep2.FI_finite_T.has_value());
  const double expected2 =
      (rep2.H * rep2.FI_finite_T->inverse()).trace() / (4.0 * 100);
  CHECK(rep2.bound == doctest::Approx(expected2).epsilon(1e-12));
  CHECK(rep.to_json().find("schema") == std::string::npos);  // CLI adds it
}

TEST_CASE("singular information is signalled") {
  CatalogEntry e = persistent_excitation_instance();
  PlantInstance p = e.nominal();
  LqgSolution sol = synthesize(p);
  ExplorationPolicy pol =
      ExplorationPolicy::static_gain(sol.F, p.dy(), 0.0);
  CHECK_THROWS_AS(
      hardness_report(e.family, scalar_theta(e.theta_star), pol, 100, 500),
      SingularFisher);
}
