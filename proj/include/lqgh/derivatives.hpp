#pragma once

#include <functional>
#include <vector>

#include "lqgh/lqg.hpp"

namespace lqgh {

// Plant-matrix derivatives along one parameter direction.
struct PlantDerivatives {
  Matrix A_dot, B_dot, C_dot, Sigma_w_dot, Sigma_v_dot;

  static PlantDerivatives zero(const PlantInstance& plant);
  PlantDerivatives scaled(double alpha) const;
  PlantDerivatives plus(const PlantDerivatives& other) const;
  bool all_zero(double tol = 0.0) const;
};

// A parametrized family of plants theta -> PlantInstance with optional
// analytic derivative closures (one per basis direction). Without closures,
// directional derivatives of the plant matrices fall back to central
// finite differences of eval.
struct ParametricFamily {
  int dim = 1;
  std::function<PlantInstance(const Vector&)> eval;
  // Optional: analytic plant derivatives for direction v at theta.
  std::function<PlantDerivatives(const Vector&, const Vector&)> derivative;

  PlantInstance at(const Vector& theta) const { return eval(theta); }
  PlantInstance at(double theta) const;
  // Plant-matrix derivatives along v (analytic when available, otherwise
  // central differences with step h = 1e-5 * (1 + |theta|)).
  PlantDerivatives plant_derivatives(const Vector& theta,
                                     const Vector& v) const;
};

Vector scalar_theta(double t);

// Derivatives of the LQG solution along one parameter direction.
struct GainDerivatives {
  Matrix F_dot;        // du x n
  Matrix L_dot;        // n x dy
  Matrix P_dot;        // n x n, symmetric
  Matrix Sigma_dot;    // n x n, symmetric
  Matrix Sigma_e_dot;  // dy x dy, symmetric
};

// Analytic directional derivatives of (F, L, P, Sigma, Sigma_e) at theta
// along v, obtained from Lyapunov equations in the closed-loop coordinates.
GainDerivatives directional_derivatives(
    const ParametricFamily& family, const Vector& theta, const Vector& v,
    const SolverConfig& cfg = SolverConfig::defaults());

// Same quantities as directional_derivatives, computed with the given plant
// and plant-matrix derivatives (avoids re-synthesis in callers that already
// hold the solution).
GainDerivatives gain_derivatives(const PlantInstance& plant,
                                 const LqgSolution& sol,
                                 const PlantDerivatives& d,
                                 const SolverConfig& cfg = SolverConfig::defaults());

// Central finite differences of theta -> (F, L, P, Sigma, Sigma_e) along v.
// Oracle for directional_derivatives.
GainDerivatives finite_diff_derivatives(
    const ParametricFamily& family, const Vector& theta, const Vector& v,
    double h = -1.0, const SolverConfig& cfg = SolverConfig::defaults());

}  // namespace lqgh
