#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lqgh/hardness.hpp"

namespace lqgh {

// A named parametric family from the benchmark catalog, with its nominal
// parameter value and analytic plant derivatives.
struct CatalogEntry {
  std::string name;
  ParametricFamily family;
  double theta_star = 0.0;

  PlantInstance nominal() const {
    return family.at(theta_star);
  }
};

// Two-state plant with a double pole at 2 and actuation [0; theta]; the
// small measurement/control weight sigma makes both loops near deadbeat in
// one direction and near marginally stable in the other.
CatalogEntry doyle(double sigma);
// Open-loop stable variant with the same fragility mechanism.
CatalogEntry doyle_stable(double sigma);
// Fully observed (LQR) variant of doyle: C = I, tiny measurement noise.
CatalogEntry doyle_fully_observed(double sigma);

// Two poles at 1 and a non-minimum-phase zero at 1 + xi; theta perturbs
// A(2,1). Hard to observe as xi -> 0.
CatalogEntry nmp(double xi);

// Sensor scaling C = [1, s] with Sigma_w = [[1,1],[1,1]]: large s makes
// synthesis sensitive and identification slow simultaneously.
CatalogEntry compounding(double s);
// Same structure with Sigma_w = I: s trades control cost against
// identification rate.
CatalogEntry tradeoffs(double s);

// Fully observed instance whose parameter direction satisfies
// A_dot = -B_dot F at the nominal parameter, so the static optimal gain is
// not persistently exciting while the Hessian stays bounded away from zero.
CatalogEntry persistent_excitation_instance();

// Catalog lookup by name ("doyle", "doyle_stable", "doyle_fully_observed",
// "nmp", "compounding", "tradeoffs", "pe_loss"); param is sigma/xi/s where
// applicable.
CatalogEntry catalog(const std::string& name, double param);

struct RateFit {
  std::vector<double> grid;
  std::vector<double> values;
  double slope = 0.0;
  double log_constant = 0.0;  // intercept of log(value) vs log(grid)
  double constant = 0.0;      // exp(log_constant)
  double residual = 0.0;      // RMS residual in log space
};

// Least-squares fit of log(values) against log(grid).
RateFit rate_fit(const std::vector<double>& grid,
                 const std::vector<double>& values);

// Co-design objective J_star(s) + tr(H(s) FI(s)^{-1}) / N for a family of
// catalog entries indexed by the design parameter s, explored with the
// certainty-equivalent policy plus unit probing noise.
double codesign_objective(const std::function<CatalogEntry(double)>& family_of_s,
                          double s, int N, double probe_scale = 1.0,
                          const SolverConfig& cfg = SolverConfig::defaults());

struct CodesignResult {
  double s_star = 0.0;
  double objective = 0.0;
  bool at_boundary = false;
};

// Minimizes the co-design objective over [lo, hi]: 33-point grid scan
// followed by golden-section refinement. Defaults to the tradeoffs family.
CodesignResult codesign_minimize(
    int N, double lo, double hi,
    const std::function<CatalogEntry(double)>& family_of_s = tradeoffs,
    double probe_scale = 1.0,
    const SolverConfig& cfg = SolverConfig::defaults());

}  // namespace lqgh
