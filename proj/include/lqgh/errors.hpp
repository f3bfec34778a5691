#pragma once

#include <stdexcept>
#include <string>

namespace lqgh {

// Base class for all solver and domain failures.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonStabilizable : SolverError {
  using SolverError::SolverError;
};

struct NonDetectable : SolverError {
  using SolverError::SolverError;
};

struct NoConvergence : SolverError {
  using SolverError::SolverError;
};

struct Unstable : SolverError {
  double spectral_radius = 0.0;
  Unstable(const std::string& msg, double rho)
      : SolverError(msg), spectral_radius(rho) {}
};

struct ClosedLoopUnstable : SolverError {
  double spectral_radius = 0.0;
  ClosedLoopUnstable(const std::string& msg, double rho)
      : SolverError(msg), spectral_radius(rho) {}
};

struct IllPosed : SolverError {
  using SolverError::SolverError;
};

struct ExplorationUnstable : SolverError {
  using SolverError::SolverError;
};

struct SingularFisher : SolverError {
  using SolverError::SolverError;
};

struct NotStabilizing : SolverError {
  using SolverError::SolverError;
};

struct BracketInvalid : SolverError {
  using SolverError::SolverError;
};

struct NonFiniteObjective : SolverError {
  using SolverError::SolverError;
};

struct NonPositive : SolverError {
  using SolverError::SolverError;
};

struct DimensionMismatch : SolverError {
  using SolverError::SolverError;
};

struct InvalidInstance : SolverError {
  using SolverError::SolverError;
};

}  // namespace lqgh
