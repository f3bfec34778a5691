#include "lqgh/hardness.hpp"

#include <json.hpp>

namespace lqgh {

ExplorationPolicy ExplorationPolicy::optimal_lqg(const PlantInstance& plant,
                                                 const LqgSolution& sol,
                                                 double eta_scale) {
  ExplorationPolicy p;
  p.A_exp = sol.A_cl_o + plant.B * sol.F;
  p.B_exp = sol.L;
  p.C_exp = sol.F;
  p.D_exp_y = Matrix::Zero(plant.du(), plant.dy());
  p.D_exp_eta = eta_scale * Matrix::Identity(plant.du(), plant.du());
  // The internal predictor is driven by the actual input, probing included.
  p.B_exp_eta = plant.B * p.D_exp_eta;
  return p;
}

ExplorationPolicy ExplorationPolicy::static_gain(const Matrix& F_tilde, int dy,
                                                 double eta_scale) {
  if (F_tilde.cols() != dy)
    throw DimensionMismatch("static_gain: gain must act on the measurement");
  ExplorationPolicy p;
  const int du = static_cast<int>(F_tilde.rows());
  p.A_exp.resize(0, 0);
  p.B_exp.resize(0, dy);
  p.C_exp.resize(du, 0);
  p.D_exp_y = F_tilde;
  p.D_exp_eta = eta_scale * Matrix::Identity(du, du);
  p.B_exp_eta.resize(0, du);
  return p;
}

namespace {

struct Synthesized {
  PlantInstance plant;
  LqgSolution sol;
  PlantDerivatives d;
  GainDerivatives g;
};

Synthesized prepare(const ParametricFamily& family, const Vector& theta,
                    const Vector& v, const SolverConfig& cfg) {
  Synthesized s{family.eval(theta), {}, {}, {}};
  s.sol = synthesize(s.plant, cfg);
  s.d = family.plant_derivatives(theta, v);
  s.g = gain_derivatives(s.plant, s.sol, s.d, cfg);
  return s;
}

double hessian_from_joint(const Synthesized& s, const Matrix& A_joint,
                          const Matrix& B_joint, const SolverConfig& cfg) {
  double rho = spectral_radius(A_joint);
  if (rho >= 1.0 - 1e-9)
    throw Unstable("hessian: joint dynamics unstable", rho);
  Matrix Sigma_H =
      solve_dlyap(A_joint, B_joint * s.sol.Sigma_e * B_joint.transpose(), cfg);
  const int n = s.plant.n();
  Matrix FF(s.plant.du(), 2 * n);
  FF << s.g.F_dot, s.sol.F;
  return 2.0 * (s.sol.Psi * FF * Sigma_H * FF.transpose()).trace();
}

}  // namespace

double hessian_form_strict(const ParametricFamily& family, const Vector& theta,
                           const Vector& v, const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  const int n = s.plant.n();
  Matrix A_joint(2 * n, 2 * n);
  A_joint << s.sol.A_cl_c, Matrix::Zero(n, n),
      s.d.A_dot - s.sol.L * s.d.C_dot + s.d.B_dot * s.sol.F, s.sol.A_cl_o;
  Matrix B_joint(2 * n, s.plant.dy());
  B_joint << s.sol.L, s.g.L_dot;
  return hessian_from_joint(s, A_joint, B_joint, cfg);
}

double hessian_form_causal(const ParametricFamily& family, const Vector& theta,
                           const Vector& v, const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  const int n = s.plant.n();
  const Matrix& C = s.plant.C;
  Eigen::LDLT<Matrix> Se(s.sol.Sigma_e);
  Matrix Lbar =
      Se.solve((s.sol.Sigma * C.transpose()).transpose()).transpose();
  Matrix I_LC = Matrix::Identity(n, n) - Lbar * C;
  Matrix Lbar_dot = I_LC * s.sol.Sigma * s.d.C_dot.transpose() +
                    I_LC * s.g.Sigma_dot * C.transpose() -
                    Lbar * s.d.C_dot * s.sol.Sigma * C.transpose();
  Lbar_dot = Se.solve(Lbar_dot.transpose()).transpose().eval();

  Matrix A_joint(2 * n, 2 * n);
  A_joint << s.sol.A_cl_c, Matrix::Zero(n, n),
      I_LC * (s.d.A_dot + s.d.B_dot * s.sol.F) -
          Lbar * s.d.C_dot * s.sol.A_cl_c,
      I_LC * s.plant.A;
  Matrix B_joint(2 * n, s.plant.dy());
  B_joint << Lbar, Lbar_dot;
  return hessian_from_joint(s, A_joint, B_joint, cfg);
}

double hessian_lqr(const ParametricFamily& family, const Vector& theta,
                   const Vector& v, const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  Matrix X = solve_dlyap(s.sol.A_cl_c, s.plant.Sigma_w, cfg);
  return 2.0 * (s.sol.Psi * s.g.F_dot * X * s.g.F_dot.transpose()).trace();
}

namespace {

Matrix polarize(int d, const std::function<double(const Vector&)>& q) {
  Matrix M(d, d);
  Vector diag(d);
  for (int i = 0; i < d; ++i) {
    Vector ei = Vector::Zero(d);
    ei(i) = 1.0;
    diag(i) = q(ei);
    M(i, i) = diag(i);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Vector eij = Vector::Zero(d);
      eij(i) = 1.0;
      eij(j) = 1.0;
      double hij = 0.5 * (q(eij) - diag(i) - diag(j));
      M(i, j) = hij;
      M(j, i) = hij;
    }
  return M;
}

}  // namespace

Matrix hessian_matrix(const ParametricFamily& family, const Vector& theta,
                      const SolverConfig& cfg) {
  return polarize(family.dim, [&](const Vector& v) {
    return hessian_form_strict(family, theta, v, cfg);
  });
}

namespace {

struct FisherJoint {
  Matrix A_joint, B_joint, W, C_out;
  Matrix Sigma_e, Sigma_e_dot;
};

FisherJoint fisher_joint(const Synthesized& s, const ExplorationPolicy& p) {
  const int n = s.plant.n();
  const int ne = p.order();
  const int dy = s.plant.dy();
  const int du = s.plant.du();
  const int deta = static_cast<int>(p.D_exp_eta.cols());
  if (p.B_exp.cols() != dy || p.C_exp.rows() != du ||
      p.D_exp_y.rows() != du || p.D_exp_y.cols() != dy ||
      p.D_exp_eta.rows() != du)
    throw DimensionMismatch("fisher: policy dimensions");
  const Matrix& A = s.plant.A;
  const Matrix& B = s.plant.B;
  const Matrix& C = s.plant.C;

  FisherJoint j;
  j.A_joint.setZero(2 * n + ne, 2 * n + ne);
  j.A_joint.topLeftCorner(n, n) = A + B * p.D_exp_y * C;
  j.A_joint.block(0, n, n, ne) = B * p.C_exp;
  j.A_joint.block(n, 0, ne, n) = p.B_exp * C;
  j.A_joint.block(n, n, ne, ne) = p.A_exp;
  j.A_joint.block(n + ne, 0, n, n) =
      s.d.A_dot - s.sol.L * s.d.C_dot + s.d.B_dot * p.D_exp_y * C;
  j.A_joint.block(n + ne, n, n, ne) = s.d.B_dot * p.C_exp;
  j.A_joint.bottomRightCorner(n, n) = s.sol.A_cl_o;

  j.B_joint.setZero(2 * n + ne, dy + deta);
  j.B_joint.block(0, 0, n, dy) = s.sol.L + B * p.D_exp_y;
  j.B_joint.block(0, dy, n, deta) = B * p.D_exp_eta;
  j.B_joint.block(n, 0, ne, dy) = p.B_exp;
  if (p.B_exp_eta.size() > 0) {
    if (p.B_exp_eta.rows() != ne || p.B_exp_eta.cols() != deta)
      throw DimensionMismatch("fisher: probing feedthrough dimensions");
    j.B_joint.block(n, dy, ne, deta) = p.B_exp_eta;
  }
  j.B_joint.block(n + ne, 0, n, dy) = s.g.L_dot + s.d.B_dot * p.D_exp_y;
  j.B_joint.block(n + ne, dy, n, deta) = s.d.B_dot * p.D_exp_eta;

  j.W.setZero(dy + deta, dy + deta);
  j.W.topLeftCorner(dy, dy) = s.sol.Sigma_e;
  j.W.bottomRightCorner(deta, deta).setIdentity();

  j.C_out.setZero(dy, 2 * n + ne);
  j.C_out.leftCols(n) = s.d.C_dot;
  j.C_out.rightCols(n) = C;

  j.Sigma_e = s.sol.Sigma_e;
  j.Sigma_e_dot = s.g.Sigma_e_dot;
  return j;
}

double log_det_curvature(const Matrix& Sigma_e, const Matrix& Sigma_e_dot) {
  Matrix M = Sigma_e.ldlt().solve(Sigma_e_dot);
  return 0.5 * (M * M).trace();
}

}  // namespace

double fisher_rate(const ParametricFamily& family, const Vector& theta,
                   const ExplorationPolicy& policy, const Vector& v,
                   const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  FisherJoint j = fisher_joint(s, policy);
  double rho = spectral_radius(j.A_joint);
  if (rho >= 1.0 - 1e-9)
    throw ExplorationUnstable("fisher_rate: exploration loop spectral radius " +
                              std::to_string(rho));
  Matrix Sigma_FI =
      solve_dlyap(j.A_joint, j.B_joint * j.W * j.B_joint.transpose(), cfg);
  double quad =
      (j.Sigma_e.ldlt().solve(j.C_out * Sigma_FI * j.C_out.transpose()))
          .trace();
  return quad + log_det_curvature(j.Sigma_e, j.Sigma_e_dot);
}

double fisher_rate_optimal_policy(const ParametricFamily& family,
                                  const Vector& theta, double eta_scale,
                                  const Vector& v, const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  const int n = s.plant.n();
  const int dy = s.plant.dy();
  const int du = s.plant.du();
  Matrix Deta = eta_scale * Matrix::Identity(du, du);

  Matrix A_joint(2 * n, 2 * n);
  A_joint << s.sol.A_cl_c, Matrix::Zero(n, n),
      s.d.A_dot - s.sol.L * s.d.C_dot + s.d.B_dot * s.sol.F, s.sol.A_cl_o;
  Matrix B_joint(2 * n, dy + du);
  B_joint << s.sol.L, s.plant.B * Deta,
      s.g.L_dot, s.d.B_dot * Deta;
  Matrix W = Matrix::Zero(dy + du, dy + du);
  W.topLeftCorner(dy, dy) = s.sol.Sigma_e;
  W.bottomRightCorner(du, du).setIdentity();
  Matrix C_out(dy, 2 * n);
  C_out << s.d.C_dot, s.plant.C;

  double rho = spectral_radius(A_joint);
  if (rho >= 1.0 - 1e-9)
    throw ExplorationUnstable(
        "fisher_rate_optimal_policy: joint spectral radius " +
        std::to_string(rho));
  Matrix Sigma_FI = solve_dlyap(A_joint, B_joint * W * B_joint.transpose(), cfg);
  double quad =
      (s.sol.Sigma_e.ldlt().solve(C_out * Sigma_FI * C_out.transpose()))
          .trace();
  return quad + log_det_curvature(s.sol.Sigma_e, s.g.Sigma_e_dot);
}

double fisher_finite_T(const ParametricFamily& family, const Vector& theta,
                       const ExplorationPolicy& policy, const Vector& v, int T,
                       const SolverConfig& cfg) {
  if (T < 1) throw InvalidInstance("fisher_finite_T: T must be >= 1");
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Synthesized s = prepare(family, theta, v, cfg);
  if (s.d.all_zero()) return 0.0;
  FisherJoint j = fisher_joint(s, policy);
  double rho = spectral_radius(j.A_joint);
  if (rho >= 1.0 + 1e-9)
    throw ExplorationUnstable(
        "fisher_finite_T: exploration loop spectral radius " +
        std::to_string(rho));

  // Predictor state starts at zero, so the joint covariance starts at zero.
  Eigen::LDLT<Matrix> Se(j.Sigma_e);
  Matrix G = j.B_joint * j.W * j.B_joint.transpose();
  Matrix Sigma_t = Matrix::Zero(j.A_joint.rows(), j.A_joint.cols());
  double quad = 0.0;
  for (int t = 0; t < T; ++t) {
    quad += Se.solve(j.C_out * Sigma_t * j.C_out.transpose()).trace();
    Sigma_t = (j.A_joint * Sigma_t * j.A_joint.transpose() + G).eval();
  }
  return quad + T * log_det_curvature(j.Sigma_e, j.Sigma_e_dot);
}

double fisher_lqr_static(const ParametricFamily& family, const Vector& theta,
                         const Matrix& F_tilde, const Vector& v,
                         const SolverConfig& cfg) {
  if (v.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  PlantInstance plant = family.eval(theta);
  PlantDerivatives d = family.plant_derivatives(theta, v);
  if (d.all_zero()) return 0.0;
  Matrix Acl = plant.A + plant.B * F_tilde;
  double rho = spectral_radius(Acl);
  if (rho >= 1.0 - 1e-9)
    throw Unstable("fisher_lqr_static: closed loop unstable", rho);
  Matrix Ad = d.A_dot + d.B_dot * F_tilde;
  Matrix X = solve_dlyap(Acl, plant.Sigma_w, cfg);
  return (plant.Sigma_w.ldlt().solve(Ad * X * Ad.transpose())).trace();
}

Matrix fisher_matrix(const ParametricFamily& family, const Vector& theta,
                     const ExplorationPolicy& policy, const SolverConfig& cfg) {
  return polarize(family.dim, [&](const Vector& v) {
    return fisher_rate(family, theta, policy, v, cfg);
  });
}

namespace {

nlohmann::json matrix_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string HardnessReport::to_json() const {
  nlohmann::json j;
  j["H"] = matrix_json(H);
  j["FI_rate"] = matrix_json(FI_rate);
  j["FI_finite_T"] =
      FI_finite_T ? matrix_json(*FI_finite_T) : nlohmann::json(nullptr);
  j["T"] = T;
  j["N"] = N;
  j["bound"] = bound;
  j["ce_asymptote"] = ce_asymptote;
  j["J_star"] = J_star;
  j["warnings"] = warnings;
  return j.dump(2);
}

HardnessReport hardness_report(const ParametricFamily& family,
                               const Vector& theta,
                               const ExplorationPolicy& policy, int N, int T,
                               bool use_finite_T, const SolverConfig& cfg) {
  if (N < 1 || T < 1)
    throw InvalidInstance("hardness_report: N and T must be >= 1");
  HardnessReport rep;
  rep.N = N;
  rep.T = T;
  rep.H = hessian_matrix(family, theta, cfg);
  rep.FI_rate = fisher_matrix(family, theta, policy, cfg);
  if (use_finite_T)
    rep.FI_finite_T = polarize(family.dim, [&](const Vector& v) {
      return fisher_finite_T(family, theta, policy, v, T, cfg);
    });
  rep.J_star = synthesize(family.eval(theta), cfg).J_star;

  Matrix FI = rep.FI_finite_T ? *rep.FI_finite_T
                              : Matrix(static_cast<double>(T) * rep.FI_rate);
  Eigen::SelfAdjointEigenSolver<Matrix> es(FI);
  double lmax = es.eigenvalues().maxCoeff();
  double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 1e-10 * lmax || lmin <= 1e-12)
    throw SingularFisher(
        "hardness_report: Fisher information is singular along some "
        "direction; the exploration policy is not persistently exciting");
  if (lmax / lmin > 1e12)
    rep.warnings.push_back("Fisher information condition number exceeds 1e12");

  rep.bound = (rep.H * FI.ldlt().solve(
                           Matrix::Identity(FI.rows(), FI.cols())))
                  .trace() /
              (4.0 * N);
  rep.ce_asymptote = 2.0 * rep.bound;
  return rep;
}

}  // namespace lqgh
