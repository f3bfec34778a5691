#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lqgh/derivatives.hpp"

namespace lqgh {

// Linear exploration policy with additive probing noise eta ~ N(0, I):
//   x_exp_{t+1} = A_exp x_exp + B_exp y
//   u_t         = C_exp x_exp + D_exp_y y + D_exp_eta eta_t
struct ExplorationPolicy {
  Matrix A_exp, B_exp, C_exp, D_exp_y, D_exp_eta;
  // Probing feedthrough into the policy state: when the policy carries an
  // internal model of the plant, its state should see the same probing signal
  // that is applied to the input.  Empty means zero.
  Matrix B_exp_eta;

  int order() const { return static_cast<int>(A_exp.rows()); }

  // Certainty-equivalent optimal controller with probing scale eta on every
  // input channel: A_exp = A - LC + BF, B_exp = L, C_exp = F, D_exp_y = 0,
  // D_exp_eta = eta_scale * I.
  static ExplorationPolicy optimal_lqg(const PlantInstance& plant,
                                       const LqgSolution& sol,
                                       double eta_scale = 0.0);
  // Static state feedback u = F_tilde y (+ probing); meaningful for fully
  // observed plants (C = I).
  static ExplorationPolicy static_gain(const Matrix& F_tilde, int dy,
                                       double eta_scale = 0.0);
};

struct HardnessReport {
  Matrix H;
  Matrix FI_rate;
  std::optional<Matrix> FI_finite_T;
  int T = 0;
  int N = 0;
  double bound = 0.0;
  double ce_asymptote = 0.0;
  double J_star = 0.0;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// Excess-cost Hessian quadratic form q(v) = v' H v for certainty-equivalent
// strictly causal control, via the joint covariance of the predictor state
// and its parameter sensitivity.
double hessian_form_strict(const ParametricFamily& family, const Vector& theta,
                           const Vector& v,
                           const SolverConfig& cfg = SolverConfig::defaults());

// Causal variant (filtered estimate u = F x_{t|t}).
double hessian_form_causal(const ParametricFamily& family, const Vector& theta,
                           const Vector& v,
                           const SolverConfig& cfg = SolverConfig::defaults());

// Fully observed (LQR) Hessian 2 tr(Psi F_dot dlyap(A+BF, Sigma_w) F_dot').
double hessian_lqr(const ParametricFamily& family, const Vector& theta,
                   const Vector& v,
                   const SolverConfig& cfg = SolverConfig::defaults());

// Full Hessian matrix by polarization of hessian_form_strict.
Matrix hessian_matrix(const ParametricFamily& family, const Vector& theta,
                      const SolverConfig& cfg = SolverConfig::defaults());

// Per-time-step Fisher information rate lim_T FI/T for the scalar projection
// along v under the given exploration policy.
double fisher_rate(const ParametricFamily& family, const Vector& theta,
                   const ExplorationPolicy& policy, const Vector& v,
                   const SolverConfig& cfg = SolverConfig::defaults());

// Specialization for the certainty-equivalent optimal policy with probing
// scale eta (reduced joint state).
double fisher_rate_optimal_policy(const ParametricFamily& family,
                                  const Vector& theta, double eta_scale,
                                  const Vector& v,
                                  const SolverConfig& cfg = SolverConfig::defaults());

// Exact finite-horizon Fisher information over one length-T trajectory.
double fisher_finite_T(const ParametricFamily& family, const Vector& theta,
                       const ExplorationPolicy& policy, const Vector& v, int T,
                       const SolverConfig& cfg = SolverConfig::defaults());

// Fully observed static-gain Fisher rate
//   tr(Sigma_w^{-1} (A_dot + B_dot F_tilde) dlyap(A + B F_tilde, Sigma_w)
//      (A_dot + B_dot F_tilde)').
double fisher_lqr_static(const ParametricFamily& family, const Vector& theta,
                         const Matrix& F_tilde, const Vector& v,
                         const SolverConfig& cfg = SolverConfig::defaults());

// Full Fisher rate matrix by polarization.
Matrix fisher_matrix(const ParametricFamily& family, const Vector& theta,
                     const ExplorationPolicy& policy,
                     const SolverConfig& cfg = SolverConfig::defaults());

// Assembles the excess-cost lower bound tr(H FI^{-1}) / (4N) with
// FI = FI_finite_T when use_finite_T, else T * FI_rate. Throws SingularFisher
// when the smallest FI eigenvalue is at or below 1e-10 of the largest.
HardnessReport hardness_report(const ParametricFamily& family,
                               const Vector& theta,
                               const ExplorationPolicy& policy, int N, int T,
                               bool use_finite_T = false,
                               const SolverConfig& cfg = SolverConfig::defaults());

}  // namespace lqgh
