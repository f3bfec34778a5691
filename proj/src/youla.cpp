#include "lqgh/youla.hpp"

namespace lqgh {

CoprimeFactors coprime_factorization(const PlantInstance& plant,
                                     const LqgSolution& sol) {
  const int du = plant.du(), dy = plant.dy();
  const Matrix& B = plant.B;
  const Matrix& C = plant.C;
  const Matrix& F = sol.F;
  const Matrix& L = sol.L;

  CoprimeFactors f;
  f.M = StateSpaceTF(sol.A_cl_c, B, F, Matrix::Identity(du, du));
  f.U = StateSpaceTF(sol.A_cl_c, L, F, Matrix::Zero(du, dy));
  f.N = StateSpaceTF(sol.A_cl_c, B, C, Matrix::Zero(dy, du));
  f.V = StateSpaceTF(sol.A_cl_c, L, C, Matrix::Identity(dy, dy));
  f.Vt = StateSpaceTF(sol.A_cl_o, -B, F, Matrix::Identity(du, du));
  f.Ut = StateSpaceTF(sol.A_cl_o, L, F, Matrix::Zero(du, dy));
  f.Nt = StateSpaceTF(sol.A_cl_o, B, C, Matrix::Zero(dy, du));
  f.Mt = StateSpaceTF(sol.A_cl_o, -L, C, Matrix::Identity(dy, dy));
  return f;
}

namespace {

// Right coprime factorization K = U' V'^{-1} with stable factors: pick F_K
// stabilizing A_K + B_K F_K, then U' = (A_K + B_K F_K, B_K, C_K + D_K F_K,
// D_K) and V' = (A_K + B_K F_K, B_K, F_K, I).
void controller_rcf(const StateSpaceTF& k, StateSpaceTF& Up, StateSpaceTF& Vp) {
  const int nk = k.order(), du = k.outputs(), dy = k.inputs();
  Matrix Fk = Matrix::Zero(dy, nk);
  if (nk > 0 && spectral_radius(k.A) >= 1.0 - 1e-9) {
    if (!pbh_tests(k.A, k.B, Matrix::Identity(nk, nk)).stabilizable)
      throw NotStabilizing(
          "youla_parameter: controller has unstabilizable unstable modes");
    Matrix P = solve_dare(k.A, k.B, Matrix::Identity(nk, nk),
                          Matrix::Identity(dy, dy));
    Matrix Psi = k.B.transpose() * P * k.B + Matrix::Identity(dy, dy);
    Fk = -Psi.ldlt().solve(k.B.transpose() * P * k.A);
  }
  Matrix Ak = (nk > 0) ? Matrix(k.A + k.B * Fk) : k.A;
  Up = StateSpaceTF(Ak, k.B, k.C + k.D * Fk, k.D);
  Vp = StateSpaceTF(Ak, k.B, Fk, Matrix::Identity(dy, dy));
}

}  // namespace

YoulaParameter youla_parameter(const LinearController& K,
                               const CoprimeFactors& factors,
                               const PlantInstance& plant,
                               const SolverConfig& cfg) {
  const StateSpaceTF& k = K.realization;
  if (k.inputs() != plant.dy() || k.outputs() != plant.du())
    throw DimensionMismatch("youla_parameter: controller dimensions");

  StateSpaceTF Up, Vp;
  controller_rcf(k, Up, Vp);

  // Z = Mt V' - Nt U' has unit feedthrough; its inverse is stable exactly
  // when K internally stabilizes the plant.
  StateSpaceTF Z =
      parallel(series(Vp, factors.Mt), negate(series(Up, factors.Nt)));
  StateSpaceTF Zinv = inverse(Z);
  if (Zinv.order() > 0 && spectral_radius(Zinv.A) >= 1.0 - 1e-9)
    throw NotStabilizing(
        "youla_parameter: controller does not internally stabilize the plant");

  StateSpaceTF numer =
      parallel(series(Up, factors.Vt), negate(series(Vp, factors.Ut)));
  StateSpaceTF Q = series(Zinv, numer);
  if (Q.order() > 0 && spectral_radius(Q.A) >= 1.0 - 1e-9)
    throw NotStabilizing("youla_parameter: Youla parameter unstable");

  YoulaParameter y;
  y.original_order = Q.order();
  y.Q = balanced_truncate(Q, 1e-10);
  y.reduced_order = y.Q.order();
  return y;
}

double excess_via_youla(const YoulaParameter& Q, const LqgSolution& sol,
                        const SolverConfig& cfg) {
  Matrix Psi_half = psd_sqrt(sol.Psi);
  Matrix Se_half = psd_sqrt(sol.Sigma_e);
  return h2_norm_sq(left_multiply(Psi_half, right_multiply(Q.Q, Se_half)),
                    cfg);
}

}  // namespace lqgh
