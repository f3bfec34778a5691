#pragma once

#include <string>

#include "lqgh/matsolve.hpp"
#include "lqgh/statespace.hpp"

namespace lqgh {

// A discrete-time plant
//   x_{t+1} = A x_t + B u_t + w_t,   w ~ N(0, Sigma_w)
//   y_t     = C x_t + v_t,           v ~ N(0, Sigma_v)
// with quadratic stage cost x'Qx + u'Ru. Construction validates symmetry,
// definiteness, stabilizability, and detectability.
struct PlantInstance {
  Matrix A, B, C;
  Matrix Sigma_w, Sigma_v;
  Matrix Q, R;

  PlantInstance() = default;
  PlantInstance(Matrix A_, Matrix B_, Matrix C_, Matrix Sigma_w_,
                Matrix Sigma_v_, Matrix Q_, Matrix R_);

  int n() const { return static_cast<int>(A.rows()); }
  int du() const { return static_cast<int>(B.cols()); }
  int dy() const { return static_cast<int>(C.rows()); }

  std::string to_json() const;
  static PlantInstance from_json(const std::string& text);
};

// Output of LQG synthesis: control and filter Riccati solutions, the LQR
// gain F, the Kalman predictor gain L, and derived closed-loop data.
struct LqgSolution {
  Matrix P;       // control Riccati
  Matrix Sigma;   // filter Riccati (predictor error covariance)
  Matrix F;       // LQR gain, u = F x
  Matrix L;       // Kalman predictor gain
  Matrix Psi;     // B'PB + R
  Matrix Sigma_e; // innovation covariance C Sigma C' + Sigma_v
  Matrix A_cl_c;  // A + BF
  Matrix A_cl_o;  // A - LC
  double J_star = 0.0;
};

// A linear dynamic output-feedback controller u = K y.
struct LinearController {
  StateSpaceTF realization;
  bool strictly_proper = true;
};

LqgSolution synthesize(const PlantInstance& plant,
                       const SolverConfig& cfg = SolverConfig::defaults());

// The optimal controller F (zI - A + LC - BF)^{-1} L, strictly proper.
LinearController lqg_controller(const LqgSolution& sol,
                                const PlantInstance& plant);

// Stationary cost tr(Q Sigma_x) + tr(R Sigma_u) of the closed loop
// (plant, K) driven by (w, v). Throws ClosedLoopUnstable otherwise.
double evaluate_cost(const PlantInstance& plant, const LinearController& K,
                     const SolverConfig& cfg = SolverConfig::defaults());

// The 2x2-block closed-loop map from disturbances (d_u, d_y) injected at
// plant input and output to (u, y).
StateSpaceTF closed_loop_map_TK(const PlantInstance& plant,
                                const LinearController& K);

}  // namespace lqgh
