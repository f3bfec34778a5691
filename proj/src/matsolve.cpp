#include "lqgh/matsolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lqgh {

const SolverConfig& SolverConfig::defaults() {
  static const SolverConfig cfg{};
  return cfg;
}

double spectral_radius(const Matrix& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& M, double tol) {
  return (M - M.transpose()).norm() <= tol * (1.0 + M.norm());
}

Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Rank of a complex matrix relative to its largest singular value.
int relative_rank(const Eigen::MatrixXcd& M, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  if (smax == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol * smax) ++r;
  return r;
}

}  // namespace

PbhResult pbh_tests(const Matrix& A, const Matrix& B, const Matrix& C,
                    const SolverConfig& cfg) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || C.cols() != n)
    throw DimensionMismatch("pbh_tests: inconsistent dimensions");
  PbhResult res;
  if (n == 0) return res;
  Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
  for (int i = 0; i < n; ++i) {
    std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0) continue;
    Eigen::MatrixXcd AlI = A.cast<std::complex<double>>();
    AlI.diagonal().array() -= lam;
    if (res.stabilizable) {
      Eigen::MatrixXcd Mb(n, n + B.cols());
      Mb << AlI, B.cast<std::complex<double>>();
      if (relative_rank(Mb, cfg.rank_tol) < n) res.stabilizable = false;
    }
    if (res.detectable) {
      Eigen::MatrixXcd Mc(n + C.rows(), n);
      Mc << AlI, C.cast<std::complex<double>>();
      if (relative_rank(Mc, cfg.rank_tol) < n) res.detectable = false;
    }
  }
  return res;
}

namespace {

Matrix dare_residual_matrix(const Matrix& A, const Matrix& B, const Matrix& Q,
                            const Matrix& R, const Matrix& P) {
  Matrix BtPB = B.transpose() * P * B + R;
  Matrix BtPA = B.transpose() * P * A;
  return P - A.transpose() * P * A + BtPA.transpose() * BtPB.ldlt().solve(BtPA) -
         Q;
}

Matrix dlyap_kron(const Matrix& A, const Matrix& Q) {
  const int n = static_cast<int>(A.rows());
  Matrix M = Matrix::Identity(n * n, n * n);
  // M = I - A (x) A
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M.block(i * n, j * n, n, n) -= A(i, j) * A;
  Eigen::Map<const Vector> q(Q.data(), n * n);
  Eigen::PartialPivLU<Matrix> lu(M);
  Vector x = lu.solve(q);
  // One step of iterative refinement sharpens ill-conditioned solves.
  x += lu.solve(Vector(q - M * x));
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

Matrix dlyap_doubling(Matrix A, Matrix Q, double tol, int max_iters) {
  Matrix X = Q;
  for (int it = 0; it < max_iters; ++it) {
    Matrix inc = A * X * A.transpose();
    X += inc;
    A = (A * A).eval();
    if (inc.norm() <= tol * (1.0 + X.norm()) && A.norm() < 1.0) break;
  }
  return 0.5 * (X + X.transpose());
}

}  // namespace

DlyapResult solve_dlyap_full(const Matrix& A, const Matrix& Q,
                             const SolverConfig& cfg) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DimensionMismatch("solve_dlyap: inconsistent dimensions");
  double rho = spectral_radius(A);
  if (rho >= 1.0 - cfg.dlyap_stability_margin)
    throw Unstable("solve_dlyap: spectral radius " + std::to_string(rho), rho);
  Matrix Qs = 0.5 * (Q + Q.transpose());
  Matrix X = (n <= cfg.dlyap_kron_max_dim) ? dlyap_kron(A, Qs)
                                           : dlyap_doubling(A, Qs, 1e-14, 128);
  DlyapResult res;
  res.X = X;
  res.residual = (X - A * X * A.transpose() - Qs).norm();
  return res;
}

Matrix solve_dlyap(const Matrix& A, const Matrix& Q, const SolverConfig& cfg) {
  return solve_dlyap_full(A, Q, cfg).X;
}

DareResult solve_dare_full(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R, const SolverConfig& cfg) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m)
    throw DimensionMismatch("solve_dare: inconsistent dimensions");
  if (!is_symmetric(Q, cfg.symmetry_tol))
    throw InvalidInstance("solve_dare: Q not symmetric");
  if (!is_symmetric(R, cfg.symmetry_tol))
    throw InvalidInstance("solve_dare: R not symmetric");
  Eigen::LLT<Matrix> Rllt(R);
  if (Rllt.info() != Eigen::Success)
    throw InvalidInstance("solve_dare: R not positive definite");

  Matrix Qhalf = psd_sqrt(Q);
  PbhResult pbh = pbh_tests(A, B, Qhalf, cfg);
  if (!pbh.stabilizable) throw NonStabilizable("solve_dare: (A,B) not stabilizable");
  if (!pbh.detectable) throw NonDetectable("solve_dare: (A,Q^{1/2}) not detectable");

  // Structure-preserving doubling:
  //   Ak+1 = Ak (I + Gk Hk)^{-1} Ak
  //   Gk+1 = Gk + Ak (I + Gk Hk)^{-1} Gk Ak'
  //   Hk+1 = Hk + Ak' Hk (I + Gk Hk)^{-1} Ak,   P = lim Hk
  Matrix Ak = A;
  Matrix Gk = B * Rllt.solve(B.transpose());
  Matrix Hk = 0.5 * (Q + Q.transpose());
  bool converged = false;
  int iters = 0;
  for (; iters < cfg.dare_max_iters; ++iters) {
    Eigen::PartialPivLU<Matrix> W(Matrix::Identity(n, n) + Gk * Hk);
    Matrix WinvA = W.solve(Ak);
    Matrix WinvG = W.solve(Gk);
    Matrix Anext = Ak * WinvA;
    Matrix Gnext = Gk + Ak * WinvG * Ak.transpose();
    Matrix Hinc = Ak.transpose() * Hk * WinvA;
    Matrix Hnext = Hk + Hinc;
    Ak = Anext;
    Gk = 0.5 * (Gnext + Gnext.transpose());
    Hk = 0.5 * (Hnext + Hnext.transpose());
    if (!Hk.allFinite())
      throw NoConvergence("solve_dare: doubling diverged");
    if (Hinc.norm() <= cfg.dare_doubling_tol * (1.0 + Hk.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergence("solve_dare: max iterations reached");

  // One Newton (Kleinman) refinement: exact closed-loop Lyapunov solve at the
  // gain induced by the doubling iterate.
  Matrix P = Hk;
  {
    Matrix Psi = B.transpose() * P * B + R;
    Matrix F = -Psi.ldlt().solve(B.transpose() * P * A);
    Matrix Acl = A + B * F;
    double rho = spectral_radius(Acl);
    if (rho < 1.0 - 1e-12) {
      Matrix rhs = Q + F.transpose() * R * F;
      Matrix Pn = dlyap_kron(Acl.transpose(), 0.5 * (rhs + rhs.transpose()));
      if (Pn.allFinite() &&
          dare_residual_matrix(A, B, Q, R, Pn).norm() <=
              dare_residual_matrix(A, B, Q, R, P).norm())
        P = Pn;
    }
  }

  DareResult res;
  res.P = 0.5 * (P + P.transpose());
  res.residual = dare_residual_matrix(A, B, Q, R, res.P).norm();
  res.iterations = iters + 1;
  return res;
}

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R, const SolverConfig& cfg) {
  return solve_dare_full(A, B, Q, R, cfg).P;
}

double h2_norm_sq(const StateSpaceTF& sys, const SolverConfig& cfg) {
  double d_part = (sys.D * sys.D.transpose()).trace();
  if (sys.order() == 0) return d_part;
  double rho = spectral_radius(sys.A);
  if (rho >= 1.0 - cfg.dlyap_stability_margin)
    throw Unstable("h2_norm_sq: unstable system", rho);
  Matrix Wc = solve_dlyap(sys.A, sys.B * sys.B.transpose(), cfg);
  return (sys.C * Wc * sys.C.transpose()).trace() + d_part;
}

namespace {

// True iff the symplectic pencil associated with level gamma has a
// generalized eigenvalue on the unit circle, i.e. gamma is attained as a
// singular value of the frequency response at some frequency.
bool pencil_has_unit_circle_eig(const StateSpaceTF& sys, double gamma) {
  const int n = sys.order();
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix& C = sys.C;
  const Matrix& D = sys.D;
  const int m = sys.inputs();
  Matrix Rg = gamma * gamma * Matrix::Identity(m, m) - D.transpose() * D;
  Eigen::LLT<Matrix> Rllt(Rg);
  if (Rllt.info() != Eigen::Success) return true;  // gamma <= sigma_max(D)

  Matrix RinvDtC = Rllt.solve(D.transpose() * C);
  Matrix RinvBt = Rllt.solve(B.transpose());

  Matrix ML(2 * n, 2 * n), MR(2 * n, 2 * n);
  ML << Matrix::Identity(n, n), -B * RinvBt,
      Matrix::Zero(n, n), A.transpose() + C.transpose() * D * RinvBt;
  MR << A + B * RinvDtC, Matrix::Zero(n, n),
      -C.transpose() * (C + D * RinvDtC), Matrix::Identity(n, n);

  Eigen::GeneralizedEigenSolver<Matrix> ges(MR, ML, false);
  if (ges.info() != Eigen::Success) return true;
  auto alphas = ges.alphas();
  auto betas = ges.betas();
  for (int i = 0; i < alphas.size(); ++i) {
    std::complex<double> a = alphas(i);
    double b = betas(i);
    if (std::abs(a) == 0.0 && b == 0.0) continue;
    if (b == 0.0) continue;  // eigenvalue at infinity
    double mod = std::abs(a) / std::abs(b);
    if (std::abs(mod - 1.0) < 1e-8) return true;
  }
  return false;
}

}  // namespace

double hinf_norm(const StateSpaceTF& sys, double tol, const SolverConfig& cfg) {
  if (sys.order() == 0) {
    Eigen::JacobiSVD<Matrix> svd(sys.D);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  }
  double rho = spectral_radius(sys.A);
  if (rho >= 1.0 - cfg.dlyap_stability_margin)
    throw Unstable("hinf_norm: unstable system", rho);

  // Grid initialization.
  double lo = 0.0;
  for (int k = 0; k < cfg.hinf_grid_points; ++k) {
    double omega = M_PI * k / (cfg.hinf_grid_points - 1);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sys.eval(omega));
    if (svd.singularValues().size())
      lo = std::max(lo, svd.singularValues()(0));
  }
  {
    Eigen::JacobiSVD<Matrix> svd(sys.D);
    if (svd.singularValues().size())
      lo = std::max(lo, svd.singularValues()(0));
  }
  if (lo <= 1e-12) return lo;  // numerically zero response

  // Find an upper bound by doubling, then bisect. The pencil test certifies
  // whether a level is attained at some frequency.
  double hi = 2.0 * lo;
  int guard = 0;
  while (pencil_has_unit_circle_eig(sys, hi)) {
    hi *= 2.0;
    if (++guard > 60)
      throw NoConvergence("hinf_norm: no finite upper bound found");
  }
  guard = 0;
  while (hi - lo > tol * lo) {
    double mid = 0.5 * (lo + hi);
    if (pencil_has_unit_circle_eig(sys, mid))
      lo = mid;
    else
      hi = mid;
    if (++guard > 200) throw NoConvergence("hinf_norm: bisection stalled");
  }
  return 0.5 * (lo + hi);
}

}  // namespace lqgh
