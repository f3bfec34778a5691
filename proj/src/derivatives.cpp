#include "lqgh/derivatives.hpp"

namespace lqgh {

PlantDerivatives PlantDerivatives::zero(const PlantInstance& plant) {
  PlantDerivatives d;
  d.A_dot = Matrix::Zero(plant.n(), plant.n());
  d.B_dot = Matrix::Zero(plant.n(), plant.du());
  d.C_dot = Matrix::Zero(plant.dy(), plant.n());
  d.Sigma_w_dot = Matrix::Zero(plant.n(), plant.n());
  d.Sigma_v_dot = Matrix::Zero(plant.dy(), plant.dy());
  return d;
}

PlantDerivatives PlantDerivatives::scaled(double alpha) const {
  PlantDerivatives d = *this;
  d.A_dot *= alpha;
  d.B_dot *= alpha;
  d.C_dot *= alpha;
  d.Sigma_w_dot *= alpha;
  d.Sigma_v_dot *= alpha;
  return d;
}

PlantDerivatives PlantDerivatives::plus(const PlantDerivatives& other) const {
  PlantDerivatives d = *this;
  d.A_dot += other.A_dot;
  d.B_dot += other.B_dot;
  d.C_dot += other.C_dot;
  d.Sigma_w_dot += other.Sigma_w_dot;
  d.Sigma_v_dot += other.Sigma_v_dot;
  return d;
}

bool PlantDerivatives::all_zero(double tol) const {
  return A_dot.cwiseAbs().maxCoeff() <= tol &&
         B_dot.cwiseAbs().maxCoeff() <= tol &&
         C_dot.cwiseAbs().maxCoeff() <= tol &&
         Sigma_w_dot.cwiseAbs().maxCoeff() <= tol &&
         Sigma_v_dot.cwiseAbs().maxCoeff() <= tol;
}

Vector scalar_theta(double t) {
  Vector v(1);
  v(0) = t;
  return v;
}

PlantInstance ParametricFamily::at(double theta) const {
  return eval(scalar_theta(theta));
}

PlantDerivatives ParametricFamily::plant_derivatives(const Vector& theta,
                                                     const Vector& v) const {
  if (derivative) return derivative(theta, v);
  double h = 1e-5 * (1.0 + theta.norm());
  PlantInstance pp = eval(theta + h * v);
  PlantInstance pm = eval(theta - h * v);
  PlantDerivatives d;
  d.A_dot = (pp.A - pm.A) / (2 * h);
  d.B_dot = (pp.B - pm.B) / (2 * h);
  d.C_dot = (pp.C - pm.C) / (2 * h);
  d.Sigma_w_dot = (pp.Sigma_w - pm.Sigma_w) / (2 * h);
  d.Sigma_v_dot = (pp.Sigma_v - pm.Sigma_v) / (2 * h);
  return d;
}

namespace {

Matrix sym(const Matrix& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

GainDerivatives gain_derivatives(const PlantInstance& plant,
                                 const LqgSolution& sol,
                                 const PlantDerivatives& d,
                                 const SolverConfig& cfg) {
  GainDerivatives g;
  if (d.all_zero()) {
    g.F_dot = Matrix::Zero(plant.du(), plant.n());
    g.L_dot = Matrix::Zero(plant.n(), plant.dy());
    g.P_dot = Matrix::Zero(plant.n(), plant.n());
    g.Sigma_dot = Matrix::Zero(plant.n(), plant.n());
    g.Sigma_e_dot = Matrix::Zero(plant.dy(), plant.dy());
    return g;
  }

  const Matrix& A = plant.A;
  const Matrix& B = plant.B;
  const Matrix& C = plant.C;
  const Matrix& Ad = d.A_dot;
  const Matrix& Bd = d.B_dot;
  const Matrix& Cd = d.C_dot;

  // Control Riccati sensitivity: with F optimal, only the explicit
  // closed-loop perturbation Ad + Bd F enters.
  Matrix AdBF = Ad + Bd * sol.F;
  g.P_dot = solve_dlyap(sol.A_cl_c.transpose(),
                        2.0 * sym(AdBF.transpose() * sol.P * sol.A_cl_c), cfg);
  g.F_dot = -sol.Psi.ldlt().solve(Bd.transpose() * sol.P * sol.A_cl_c +
                                  B.transpose() * sol.P * AdBF +
                                  B.transpose() * g.P_dot * sol.A_cl_c);

  // Filter Riccati sensitivity (dual form).
  Matrix AdLC = Ad - sol.L * Cd;
  g.Sigma_dot = solve_dlyap(
      sol.A_cl_o,
      2.0 * sym(AdLC * sol.Sigma * sol.A_cl_o.transpose()) + d.Sigma_w_dot +
          sol.L * d.Sigma_v_dot * sol.L.transpose(),
      cfg);
  Eigen::LDLT<Matrix> Se(sol.Sigma_e);
  g.L_dot = (sol.A_cl_o * sol.Sigma * Cd.transpose() +
             sol.A_cl_o * g.Sigma_dot * C.transpose() +
             AdLC * sol.Sigma * C.transpose() - sol.L * d.Sigma_v_dot)
                .eval();
  g.L_dot = Se.solve(g.L_dot.transpose()).transpose();

  g.Sigma_e_dot = Cd * sol.Sigma * C.transpose() +
                  C * g.Sigma_dot * C.transpose() +
                  C * sol.Sigma * Cd.transpose() + d.Sigma_v_dot;

  g.P_dot = sym(g.P_dot);
  g.Sigma_dot = sym(g.Sigma_dot);
  g.Sigma_e_dot = sym(g.Sigma_e_dot);
  return g;
}

GainDerivatives directional_derivatives(const ParametricFamily& family,
                                        const Vector& theta, const Vector& v,
                                        const SolverConfig& cfg) {
  PlantInstance plant = family.eval(theta);
  LqgSolution sol = synthesize(plant, cfg);
  return gain_derivatives(plant, sol, family.plant_derivatives(theta, v), cfg);
}

GainDerivatives finite_diff_derivatives(const ParametricFamily& family,
                                        const Vector& theta, const Vector& v,
                                        double h, const SolverConfig& cfg) {
  if (h <= 0.0) h = 1e-5 * (1.0 + theta.norm());
  if (v.cwiseAbs().maxCoeff() == 0.0) {
    PlantInstance plant = family.eval(theta);
    GainDerivatives g;
    g.F_dot = Matrix::Zero(plant.du(), plant.n());
    g.L_dot = Matrix::Zero(plant.n(), plant.dy());
    g.P_dot = Matrix::Zero(plant.n(), plant.n());
    g.Sigma_dot = Matrix::Zero(plant.n(), plant.n());
    g.Sigma_e_dot = Matrix::Zero(plant.dy(), plant.dy());
    return g;
  }
  PlantInstance pp = family.eval(theta + h * v);
  PlantInstance pm = family.eval(theta - h * v);
  LqgSolution sp = synthesize(pp, cfg);
  LqgSolution sm = synthesize(pm, cfg);
  GainDerivatives g;
  g.F_dot = (sp.F - sm.F) / (2 * h);
  g.L_dot = (sp.L - sm.L) / (2 * h);
  g.P_dot = (sp.P - sm.P) / (2 * h);
  g.Sigma_dot = (sp.Sigma - sm.Sigma) / (2 * h);
  g.Sigma_e_dot = (sp.Sigma_e - sm.Sigma_e) / (2 * h);
  return g;
}

}  // namespace lqgh
