#include "lqgh/lqg.hpp"

#include <json.hpp>

namespace lqgh {

namespace {

void require_psd(const Matrix& M, const char* name) {
  if (!is_symmetric(M))
    throw InvalidInstance(std::string(name) + " not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + M.norm()))
    throw InvalidInstance(std::string(name) + " not positive semidefinite");
}

void require_pd(const Matrix& M, const char* name) {
  if (!is_symmetric(M))
    throw InvalidInstance(std::string(name) + " not symmetric");
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw InvalidInstance(std::string(name) + " not positive definite");
}

}  // namespace

PlantInstance::PlantInstance(Matrix A_, Matrix B_, Matrix C_, Matrix Sigma_w_,
                             Matrix Sigma_v_, Matrix Q_, Matrix R_)
    : A(std::move(A_)),
      B(std::move(B_)),
      C(std::move(C_)),
      Sigma_w(std::move(Sigma_w_)),
      Sigma_v(std::move(Sigma_v_)),
      Q(std::move(Q_)),
      R(std::move(R_)) {
  const int nx = n();
  if (A.cols() != nx || B.rows() != nx || C.cols() != nx ||
      Sigma_w.rows() != nx || Sigma_w.cols() != nx ||
      Sigma_v.rows() != dy() || Sigma_v.cols() != dy() || Q.rows() != nx ||
      Q.cols() != nx || R.rows() != du() || R.cols() != du())
    throw DimensionMismatch("PlantInstance: inconsistent dimensions");
  require_psd(Sigma_w, "Sigma_w");
  require_pd(Sigma_v, "Sigma_v");
  require_psd(Q, "Q");
  require_pd(R, "R");

  if (!pbh_tests(A, B, C).stabilizable)
    throw NonStabilizable("PlantInstance: (A, B) not stabilizable");
  if (!pbh_tests(A, B, C).detectable)
    throw NonDetectable("PlantInstance: (A, C) not detectable");
  // Filter Riccati needs (A', Sigma_w^{1/2}) detectable, control Riccati
  // needs (A, Q^{1/2}) detectable.
  Matrix Wh = psd_sqrt(Sigma_w);
  if (!pbh_tests(A.transpose(), Matrix::Zero(n(), 1), Wh).detectable)
    throw NonDetectable("PlantInstance: (A', Sigma_w^{1/2}) not detectable");
  if (!pbh_tests(A, Matrix::Zero(n(), 1), psd_sqrt(Q)).detectable)
    throw NonDetectable("PlantInstance: (A, Q^{1/2}) not detectable");
}

namespace {

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InvalidInstance(std::string("expected nested array for ") + name);
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix M(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw InvalidInstance(std::string("ragged rows in ") + name);
    for (size_t k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

}  // namespace

std::string PlantInstance::to_json() const {
  nlohmann::json j;
  j["A"] = matrix_to_json(A);
  j["B"] = matrix_to_json(B);
  j["C"] = matrix_to_json(C);
  j["Sigma_w"] = matrix_to_json(Sigma_w);
  j["Sigma_v"] = matrix_to_json(Sigma_v);
  j["Q"] = matrix_to_json(Q);
  j["R"] = matrix_to_json(R);
  return j.dump(2);
}

PlantInstance PlantInstance::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("JSON parse error: ") + e.what());
  }
  for (const char* key : {"A", "B", "C", "Sigma_w", "Sigma_v", "Q", "R"})
    if (!j.contains(key))
      throw InvalidInstance(std::string("missing field ") + key);
  try {
    return PlantInstance(
        matrix_from_json(j["A"], "A"), matrix_from_json(j["B"], "B"),
        matrix_from_json(j["C"], "C"), matrix_from_json(j["Sigma_w"], "Sigma_w"),
        matrix_from_json(j["Sigma_v"], "Sigma_v"),
        matrix_from_json(j["Q"], "Q"), matrix_from_json(j["R"], "R"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("JSON field error: ") + e.what());
  }
}

LqgSolution synthesize(const PlantInstance& plant, const SolverConfig& cfg) {
  LqgSolution sol;
  sol.P = solve_dare(plant.A, plant.B, plant.Q, plant.R, cfg);
  sol.Sigma = solve_dare(plant.A.transpose(), plant.C.transpose(),
                         plant.Sigma_w, plant.Sigma_v, cfg);
  sol.Psi = plant.B.transpose() * sol.P * plant.B + plant.R;
  sol.F = -sol.Psi.ldlt().solve(plant.B.transpose() * sol.P * plant.A);
  sol.Sigma_e = plant.C * sol.Sigma * plant.C.transpose() + plant.Sigma_v;
  sol.L = plant.A * sol.Sigma * plant.C.transpose() *
          sol.Sigma_e.ldlt().solve(Matrix::Identity(plant.dy(), plant.dy()));
  sol.A_cl_c = plant.A + plant.B * sol.F;
  sol.A_cl_o = plant.A - sol.L * plant.C;
  sol.J_star = evaluate_cost(plant, lqg_controller(sol, plant), cfg);
  return sol;
}

LinearController lqg_controller(const LqgSolution& sol,
                                const PlantInstance& plant) {
  LinearController K;
  K.realization =
      StateSpaceTF(sol.A_cl_o + plant.B * sol.F, sol.L, sol.F,
                   Matrix::Zero(plant.du(), plant.dy()));
  K.strictly_proper = true;
  return K;
}

double evaluate_cost(const PlantInstance& plant, const LinearController& K,
                     const SolverConfig& cfg) {
  const StateSpaceTF& k = K.realization;
  if (k.inputs() != plant.dy() || k.outputs() != plant.du())
    throw DimensionMismatch("evaluate_cost: controller dimensions");
  if (K.strictly_proper && !k.strictly_proper(1e-14))
    throw InvalidInstance("evaluate_cost: controller marked strictly proper has feedthrough");
  const int n = plant.n(), nk = k.order(), dy = plant.dy();

  // Joint state (x, x_K) driven by (w, v); the plant has no direct u -> y
  // feedthrough, so the interconnection is always well posed.
  Matrix Acl(n + nk, n + nk);
  Acl << plant.A + plant.B * k.D * plant.C, plant.B * k.C,
      k.B * plant.C, k.A;
  double rho = spectral_radius(Acl);
  if (rho >= 1.0 - 1e-9)
    throw ClosedLoopUnstable(
        "evaluate_cost: closed loop spectral radius " + std::to_string(rho),
        rho);
  Matrix Bn(n + nk, n + dy);
  Bn << Matrix::Identity(n, n), plant.B * k.D,
      Matrix::Zero(nk, n), k.B;
  Matrix W = Matrix::Zero(n + dy, n + dy);
  W.topLeftCorner(n, n) = plant.Sigma_w;
  W.bottomRightCorner(dy, dy) = plant.Sigma_v;
  Matrix Sigma_z = solve_dlyap(Acl, Bn * W * Bn.transpose(), cfg);

  Matrix Sigma_x = Sigma_z.topLeftCorner(n, n);
  Matrix G(plant.du(), n + nk);
  G << k.D * plant.C, k.C;
  Matrix Sigma_u = G * Sigma_z * G.transpose() +
                   k.D * plant.Sigma_v * k.D.transpose();
  return (plant.Q * Sigma_x).trace() + (plant.R * Sigma_u).trace();
}

StateSpaceTF closed_loop_map_TK(const PlantInstance& plant,
                                const LinearController& K) {
  const StateSpaceTF& k = K.realization;
  if (k.inputs() != plant.dy() || k.outputs() != plant.du())
    throw DimensionMismatch("closed_loop_map_TK: controller dimensions");
  const int n = plant.n(), nk = k.order();
  const int du = plant.du(), dy = plant.dy();

  // Loop: u = w1 + K y, y = w2 + P_u u with P_u = C (zI - A)^{-1} B.
  StateSpaceTF T;
  T.A.resize(n + nk, n + nk);
  T.A << plant.A + plant.B * k.D * plant.C, plant.B * k.C,
      k.B * plant.C, k.A;
  T.B.resize(n + nk, du + dy);
  T.B << plant.B, plant.B * k.D,
      Matrix::Zero(nk, du), k.B;
  T.C.resize(du + dy, n + nk);
  T.C << k.D * plant.C, k.C,
      plant.C, Matrix::Zero(dy, nk);
  T.D.resize(du + dy, du + dy);
  T.D << Matrix::Identity(du, du), k.D,
      Matrix::Zero(dy, du), Matrix::Identity(dy, dy);
  return T;
}

}  // namespace lqgh
