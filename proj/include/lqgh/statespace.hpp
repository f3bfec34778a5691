#pragma once

#include <Eigen/Dense>

#include "lqgh/errors.hpp"

namespace lqgh {

// State-space realization of a rational transfer matrix C (zI - A)^{-1} B + D.
// An empty A (0 states) represents a static gain D.
struct StateSpaceTF {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd C;  // p x n
  Eigen::MatrixXd D;  // p x m

  StateSpaceTF() = default;
  StateSpaceTF(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
               Eigen::MatrixXd D_);

  int order() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(D.cols()); }
  int outputs() const { return static_cast<int>(D.rows()); }

  bool strictly_proper(double tol = 0.0) const;

  // Frequency response at z = e^{j omega}.
  Eigen::MatrixXcd eval(double omega) const;

  static StateSpaceTF static_gain(const Eigen::MatrixXd& D);
  static StateSpaceTF identity(int n);
  static StateSpaceTF zero(int p, int m);
};

// Series composition: (g2 * g1)(z) = g2(z) g1(z), signal flows g1 then g2.
StateSpaceTF series(const StateSpaceTF& g1, const StateSpaceTF& g2);

// Entrywise sum g1 + g2 (same dimensions).
StateSpaceTF parallel(const StateSpaceTF& g1, const StateSpaceTF& g2);

StateSpaceTF negate(const StateSpaceTF& g);

// Stack [g1; g2] (shared input) and [g1, g2] (shared output).
StateSpaceTF vstack(const StateSpaceTF& g1, const StateSpaceTF& g2);
StateSpaceTF hstack(const StateSpaceTF& g1, const StateSpaceTF& g2);

// Constant pre/post multiplication.
StateSpaceTF left_multiply(const Eigen::MatrixXd& M, const StateSpaceTF& g);
StateSpaceTF right_multiply(const StateSpaceTF& g, const Eigen::MatrixXd& M);

// Inverse of a square system with invertible feedthrough D.
StateSpaceTF inverse(const StateSpaceTF& g);

// Balanced truncation of a stable system, dropping Hankel singular values
// below cutoff (relative to the largest). Returns an equivalent reduced
// realization; feedthrough unchanged.
StateSpaceTF balanced_truncate(const StateSpaceTF& g, double cutoff = 1e-10);

}  // namespace lqgh
