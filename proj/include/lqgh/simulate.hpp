#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqgh/hardness.hpp"

namespace lqgh {

// Counter-based Gaussian stream: every draw is a pure function of
// (seed, replicate, trajectory, time, channel, index), so simulations are
// bit-reproducible regardless of evaluation order or parallelism.
struct CounterRng {
  std::uint64_t seed = 0;

  double normal(std::uint64_t replicate, std::uint64_t trajectory,
                std::uint64_t t, std::uint64_t channel,
                std::uint64_t index) const;
};

// N trajectories of length T stored in lockstep: Y[t] is dy x N, U[t] is
// du x N (column j = trajectory j).
struct Dataset {
  std::vector<Matrix> Y;
  std::vector<Matrix> U;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  int N = 0;
  int T = 0;
  std::string policy_descriptor;

  std::string to_csv() const;
};

// Simulates the plant under the exploration policy with x0 ~ N(0, Sigma)
// (stationary predictor-error convention) and zero initial policy state.
Dataset simulate(const PlantInstance& plant, const ExplorationPolicy& policy,
                 int N, int T, std::uint64_t seed, std::uint64_t replicate = 0,
                 const SolverConfig& cfg = SolverConfig::defaults());

// Negative log-likelihood of the dataset under the model at theta:
//   (1/2N) sum_{n,t} ||y - y_hat||^2_{Sigma_e^{-1}} + (T/2) log|Sigma_e|
// with innovations from the stationary Kalman predictor started at zero.
// With total=true the quadratic sum is not averaged over trajectories and
// the log-det term is counted once per trajectory (same minimizer).
double nll(const Dataset& data, const ParametricFamily& family,
           const Vector& theta, bool total = false,
           const SolverConfig& cfg = SolverConfig::defaults());

struct MleResult {
  double theta_hat = 0.0;
  double value = 0.0;
  bool at_boundary = false;
};

// Scalar maximum-likelihood estimate over [lo, hi]: coarse grid scan, then
// golden-section with a final parabolic refinement to 1e-8 * (1 + |theta|).
MleResult mle_scalar(const Dataset& data, const ParametricFamily& family,
                     double lo, double hi,
                     const SolverConfig& cfg = SolverConfig::defaults());

struct CePipelineResult {
  std::vector<double> theta_hats;  // per successful replicate
  std::vector<double> excess;      // per successful replicate
  double mean_excess = 0.0;
  double std_error = 0.0;
  int N = 0;
  int T = 0;
  int replicates = 0;
  int failures = 0;  // destabilizing or non-synthesizable estimates
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// Certainty-equivalence pipeline: simulate -> MLE -> synthesize at the
// estimate -> excess cost on the true plant, repeated over replicates.
// Replicates run in parallel (capped by LQGH_THREADS) with deterministic
// aggregation. bracket_lo/hi default to theta_true -/+ 0.5.
CePipelineResult ce_pipeline(const ParametricFamily& family, double theta_true,
                             const ExplorationPolicy& policy, int N, int T,
                             int replicates, std::uint64_t seed,
                             double bracket_lo, double bracket_hi,
                             const SolverConfig& cfg = SolverConfig::defaults());
CePipelineResult ce_pipeline(const ParametricFamily& family, double theta_true,
                             const ExplorationPolicy& policy, int N, int T,
                             int replicates, std::uint64_t seed,
                             const SolverConfig& cfg = SolverConfig::defaults());

// Misspecified certainty equivalence: data comes from family at theta_true,
// but the learner fits theta in a model whose actuation matrix is
// [theta; 1 + epsilon] (remaining matrices taken from the true plant).
CePipelineResult misspecified_pipeline(
    const ParametricFamily& family, double theta_true, double epsilon,
    const ExplorationPolicy& policy, int N, int T, int replicates,
    std::uint64_t seed, const SolverConfig& cfg = SolverConfig::defaults());

// Monte Carlo estimate of the finite-T Fisher information: average over
// replicates of the second central difference of the single-trajectory nll.
double empirical_fisher(const ParametricFamily& family, const Vector& theta,
                        const ExplorationPolicy& policy, int T, int replicates,
                        std::uint64_t seed,
                        const SolverConfig& cfg = SolverConfig::defaults());

// Parallelism cap: LQGH_THREADS if set (>=1), else hardware concurrency.
int thread_cap();

}  // namespace lqgh
