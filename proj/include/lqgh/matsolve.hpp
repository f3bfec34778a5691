#pragma once

#include <Eigen/Dense>

#include "lqgh/errors.hpp"
#include "lqgh/statespace.hpp"

namespace lqgh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Centralized numerical tolerances. Defaults follow the contracts of the
// individual solvers; callers needing looser/tighter behavior pass their own.
struct SolverConfig {
  double symmetry_tol = 1e-10;          // relative symmetry check on inputs
  double dare_doubling_tol = 1e-12;     // increment tolerance for doubling
  int dare_max_iters = 200;
  double dlyap_stability_margin = 1e-9; // require rho(A) < 1 - margin
  int dlyap_kron_max_dim = 40;          // Kronecker solve below, doubling above
  double rank_tol = 1e-9;               // PBH rank tolerance (relative)
  double hinf_default_tol = 1e-9;
  int hinf_grid_points = 1024;

  static const SolverConfig& defaults();
};

// Spectral radius of a square matrix.
double spectral_radius(const Matrix& A);

// Relative symmetry check: ||M - M^T|| <= tol * (1 + ||M||).
bool is_symmetric(const Matrix& M, double tol = 1e-10);

// Symmetric PSD square root via eigendecomposition (negative eigenvalues
// clipped at zero).
Matrix psd_sqrt(const Matrix& M);

struct PbhResult {
  bool stabilizable = true;
  bool detectable = true;
};

// PBH rank tests on [A - lambda I, B] and [A - lambda I; C] at every
// eigenvalue with |lambda| >= 1.
PbhResult pbh_tests(const Matrix& A, const Matrix& B, const Matrix& C,
                    const SolverConfig& cfg = SolverConfig::defaults());

struct DareResult {
  Matrix P;
  double residual = 0.0;  // achieved fixed-point residual (absolute)
  int iterations = 0;
};

// Discrete algebraic Riccati equation
//   P = A'PA - A'PB (B'PB + R)^{-1} B'PA + Q
// solved by structure-preserving doubling with a final Newton (Kleinman)
// refinement step.
DareResult solve_dare_full(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R,
                           const SolverConfig& cfg = SolverConfig::defaults());
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R,
                  const SolverConfig& cfg = SolverConfig::defaults());

struct DlyapResult {
  Matrix X;
  double residual = 0.0;
};

// Discrete Lyapunov equation X = A X A' + Q for rho(A) < 1.
DlyapResult solve_dlyap_full(const Matrix& A, const Matrix& Q,
                             const SolverConfig& cfg = SolverConfig::defaults());
Matrix solve_dlyap(const Matrix& A, const Matrix& Q,
                   const SolverConfig& cfg = SolverConfig::defaults());

// Squared H2 norm: tr(C dlyap(A, BB') C') + tr(DD').
double h2_norm_sq(const StateSpaceTF& sys,
                  const SolverConfig& cfg = SolverConfig::defaults());

// H-infinity norm: peak singular value of the frequency response over the
// unit circle, computed by bisection certified with a unit-circle eigenvalue
// test on the associated symplectic pencil, initialized from a frequency grid.
double hinf_norm(const StateSpaceTF& sys, double tol = 1e-9,
                 const SolverConfig& cfg = SolverConfig::defaults());

}  // namespace lqgh
