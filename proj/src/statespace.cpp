#include "lqgh/statespace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lqgh/matsolve.hpp"

namespace lqgh {

StateSpaceTF::StateSpaceTF(Eigen::MatrixXd A_, Eigen::MatrixXd B_,
                           Eigen::MatrixXd C_, Eigen::MatrixXd D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols())
    throw DimensionMismatch("StateSpaceTF: inconsistent dimensions");
}

bool StateSpaceTF::strictly_proper(double tol) const {
  return D.cwiseAbs().maxCoeff() <= tol;
}

Eigen::MatrixXcd StateSpaceTF::eval(double omega) const {
  using CMat = Eigen::MatrixXcd;
  if (order() == 0) return D.cast<std::complex<double>>();
  std::complex<double> z = std::polar(1.0, omega);
  CMat zIA = -A.cast<std::complex<double>>();
  zIA.diagonal().array() += z;
  return C.cast<std::complex<double>>() *
             zIA.partialPivLu().solve(B.cast<std::complex<double>>()) +
         D.cast<std::complex<double>>();
}

StateSpaceTF StateSpaceTF::static_gain(const Eigen::MatrixXd& D) {
  StateSpaceTF g;
  g.A.resize(0, 0);
  g.B.resize(0, D.cols());
  g.C.resize(D.rows(), 0);
  g.D = D;
  return g;
}

StateSpaceTF StateSpaceTF::identity(int n) {
  return static_gain(Eigen::MatrixXd::Identity(n, n));
}

StateSpaceTF StateSpaceTF::zero(int p, int m) {
  return static_gain(Eigen::MatrixXd::Zero(p, m));
}

StateSpaceTF series(const StateSpaceTF& g1, const StateSpaceTF& g2) {
  if (g2.inputs() != g1.outputs())
    throw DimensionMismatch("series: dimension mismatch");
  const int n1 = g1.order(), n2 = g2.order();
  StateSpaceTF g;
  g.A.setZero(n1 + n2, n1 + n2);
  g.A.topLeftCorner(n1, n1) = g1.A;
  g.A.bottomLeftCorner(n2, n1) = g2.B * g1.C;
  g.A.bottomRightCorner(n2, n2) = g2.A;
  g.B.resize(n1 + n2, g1.inputs());
  g.B.topRows(n1) = g1.B;
  g.B.bottomRows(n2) = g2.B * g1.D;
  g.C.resize(g2.outputs(), n1 + n2);
  g.C.leftCols(n1) = g2.D * g1.C;
  g.C.rightCols(n2) = g2.C;
  g.D = g2.D * g1.D;
  return g;
}

StateSpaceTF parallel(const StateSpaceTF& g1, const StateSpaceTF& g2) {
  if (g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs())
    throw DimensionMismatch("parallel: dimension mismatch");
  const int n1 = g1.order(), n2 = g2.order();
  StateSpaceTF g;
  g.A.setZero(n1 + n2, n1 + n2);
  g.A.topLeftCorner(n1, n1) = g1.A;
  g.A.bottomRightCorner(n2, n2) = g2.A;
  g.B.resize(n1 + n2, g1.inputs());
  g.B.topRows(n1) = g1.B;
  g.B.bottomRows(n2) = g2.B;
  g.C.resize(g1.outputs(), n1 + n2);
  g.C.leftCols(n1) = g1.C;
  g.C.rightCols(n2) = g2.C;
  g.D = g1.D + g2.D;
  return g;
}

StateSpaceTF negate(const StateSpaceTF& g) {
  StateSpaceTF out = g;
  out.C = -out.C;
  out.D = -out.D;
  return out;
}

StateSpaceTF vstack(const StateSpaceTF& g1, const StateSpaceTF& g2) {
  if (g1.inputs() != g2.inputs())
    throw DimensionMismatch("vstack: input dimension mismatch");
  const int n1 = g1.order(), n2 = g2.order();
  StateSpaceTF g;
  g.A.setZero(n1 + n2, n1 + n2);
  g.A.topLeftCorner(n1, n1) = g1.A;
  g.A.bottomRightCorner(n2, n2) = g2.A;
  g.B.resize(n1 + n2, g1.inputs());
  g.B.topRows(n1) = g1.B;
  g.B.bottomRows(n2) = g2.B;
  g.C.setZero(g1.outputs() + g2.outputs(), n1 + n2);
  g.C.topLeftCorner(g1.outputs(), n1) = g1.C;
  g.C.bottomRightCorner(g2.outputs(), n2) = g2.C;
  g.D.resize(g1.outputs() + g2.outputs(), g1.inputs());
  g.D.topRows(g1.outputs()) = g1.D;
  g.D.bottomRows(g2.outputs()) = g2.D;
  return g;
}

StateSpaceTF hstack(const StateSpaceTF& g1, const StateSpaceTF& g2) {
  if (g1.outputs() != g2.outputs())
    throw DimensionMismatch("hstack: output dimension mismatch");
  const int n1 = g1.order(), n2 = g2.order();
  StateSpaceTF g;
  g.A.setZero(n1 + n2, n1 + n2);
  g.A.topLeftCorner(n1, n1) = g1.A;
  g.A.bottomRightCorner(n2, n2) = g2.A;
  g.B.setZero(n1 + n2, g1.inputs() + g2.inputs());
  g.B.topLeftCorner(n1, g1.inputs()) = g1.B;
  g.B.bottomRightCorner(n2, g2.inputs()) = g2.B;
  g.C.resize(g1.outputs(), n1 + n2);
  g.C.leftCols(n1) = g1.C;
  g.C.rightCols(n2) = g2.C;
  g.D.resize(g1.outputs(), g1.inputs() + g2.inputs());
  g.D.leftCols(g1.inputs()) = g1.D;
  g.D.rightCols(g2.inputs()) = g2.D;
  return g;
}

StateSpaceTF left_multiply(const Eigen::MatrixXd& M, const StateSpaceTF& g) {
  if (M.cols() != g.outputs())
    throw DimensionMismatch("left_multiply: dimension mismatch");
  StateSpaceTF out = g;
  out.C = M * out.C;
  out.D = M * out.D;
  return out;
}

StateSpaceTF right_multiply(const StateSpaceTF& g, const Eigen::MatrixXd& M) {
  if (M.rows() != g.inputs())
    throw DimensionMismatch("right_multiply: dimension mismatch");
  StateSpaceTF out = g;
  out.B = out.B * M;
  out.D = out.D * M;
  return out;
}

StateSpaceTF inverse(const StateSpaceTF& g) {
  if (g.inputs() != g.outputs())
    throw DimensionMismatch("inverse: system not square");
  Eigen::PartialPivLU<Eigen::MatrixXd> Dlu(g.D);
  Eigen::MatrixXd Dinv = Dlu.inverse();
  if (!Dinv.allFinite() ||
      Dinv.norm() * g.D.norm() > 1e14 * std::max(1, g.inputs()))
    throw IllPosed("inverse: feedthrough not invertible");
  StateSpaceTF out;
  out.A = g.A - g.B * Dinv * g.C;
  out.B = g.B * Dinv;
  out.C = -Dinv * g.C;
  out.D = Dinv;
  return out;
}

StateSpaceTF balanced_truncate(const StateSpaceTF& g, double cutoff) {
  if (g.order() == 0) return g;
  double rho = spectral_radius(g.A);
  if (rho >= 1.0 - 1e-9)
    throw Unstable("balanced_truncate: unstable system", rho);

  Eigen::MatrixXd Wc = solve_dlyap(g.A, g.B * g.B.transpose());
  Eigen::MatrixXd Wo = solve_dlyap(g.A.transpose(), g.C.transpose() * g.C);
  Eigen::MatrixXd Lc = psd_sqrt(Wc);
  Eigen::MatrixXd Lo = psd_sqrt(Wo);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lo * Lc,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& hsv = svd.singularValues();
  double smax = hsv.size() ? hsv(0) : 0.0;
  // Absolute floor: when the whole response is numerically zero, a purely
  // relative cutoff would retain round-off states.
  const double threshold = cutoff * std::max(smax, 1.0);
  int r = 0;
  for (int i = 0; i < hsv.size(); ++i)
    if (hsv(i) > threshold) ++r;
  if (r == 0) return StateSpaceTF::static_gain(g.D);
  if (r == g.order()) {
    // Nothing to drop; still rebalance for conditioning.
  }

  Eigen::VectorXd sr = hsv.head(r);
  Eigen::VectorXd isqrt = sr.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd T = Lc * svd.matrixV().leftCols(r) * isqrt.asDiagonal();
  Eigen::MatrixXd Ti =
      isqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * Lo;

  StateSpaceTF out;
  out.A = Ti * g.A * T;
  out.B = Ti * g.B;
  out.C = g.C * T;
  out.D = g.D;
  return out;
}

}  // namespace lqgh
