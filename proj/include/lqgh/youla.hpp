#pragma once

#include "lqgh/lqg.hpp"

namespace lqgh {

// Doubly coprime factorization of the plant's input-to-output channel
// induced by the optimal LQG controller: P_u = N M^{-1} = Mt^{-1} Nt,
// Vt M - Ut N = I, Mt V - Nt U = I, Vt U - Ut V = 0, Mt N - Nt M = 0.
struct CoprimeFactors {
  StateSpaceTF M, U, N, V;
  StateSpaceTF Mt, Ut, Nt, Vt;
};

// Youla parameter of a stabilizing controller, with state dimensions before
// and after balanced truncation.
struct YoulaParameter {
  StateSpaceTF Q;
  int original_order = 0;
  int reduced_order = 0;
};

CoprimeFactors coprime_factorization(const PlantInstance& plant,
                                     const LqgSolution& sol);

// Extracts the Youla parameter Q = (Vt U' - Ut V')(Mt V' - Nt U')^{-1} using
// a right coprime factorization K = U' V'^{-1} of the controller, so no
// unstable pole-zero cancellation is required. Throws NotStabilizing when K
// does not internally stabilize the plant.
YoulaParameter youla_parameter(const LinearController& K,
                               const CoprimeFactors& factors,
                               const PlantInstance& plant,
                               const SolverConfig& cfg = SolverConfig::defaults());

// Excess LQG cost of the controller with Youla parameter Q:
// || Psi^{1/2} Q Sigma_e^{1/2} ||_H2^2.
double excess_via_youla(const YoulaParameter& Q, const LqgSolution& sol,
                        const SolverConfig& cfg = SolverConfig::defaults());

}  // namespace lqgh
