#include "lqgh/instances.hpp"

#include <cmath>
#include <limits>

namespace lqgh {

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

Matrix col2(double a, double b) {
  Matrix M(2, 1);
  M << a, b;
  return M;
}

Matrix row2(double a, double b) {
  Matrix M(1, 2);
  M << a, b;
  return M;
}

Matrix scalar(double a) {
  Matrix M(1, 1);
  M << a;
  return M;
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw InvalidInstance(std::string(what) + " must be > 0");
}

}  // namespace

CatalogEntry doyle(double sigma) {
  require_positive(sigma, "doyle: sigma");
  CatalogEntry e;
  e.name = "doyle";
  e.theta_star = 1.0;
  e.family.dim = 1;
  e.family.eval = [sigma](const Vector& th) {
    return PlantInstance(mat2(2, 1, 0, 2), col2(0, th(0)), row2(1, 0),
                         mat2(1, 1, 1, 1), scalar(sigma), mat2(1, 1, 1, 1),
                         scalar(sigma));
  };
  e.family.derivative = [](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = Matrix::Zero(2, 2);
    d.B_dot = col2(0, v(0));
    d.C_dot = Matrix::Zero(1, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(1, 1);
    return d;
  };
  return e;
}

CatalogEntry doyle_stable(double sigma) {
  require_positive(sigma, "doyle_stable: sigma");
  CatalogEntry e;
  e.name = "doyle_stable";
  e.theta_star = 1.0;
  e.family.dim = 1;
  e.family.eval = [sigma](const Vector& th) {
    return PlantInstance(mat2(-0.5, 0.5, 0, -0.5), col2(th(0), th(0)),
                         row2(1, 1), mat2(0, 0, 0, 1), scalar(sigma),
                         mat2(1, 0, 0, 0), scalar(sigma));
  };
  e.family.derivative = [](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = Matrix::Zero(2, 2);
    d.B_dot = col2(v(0), v(0));
    d.C_dot = Matrix::Zero(1, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(1, 1);
    return d;
  };
  return e;
}

CatalogEntry doyle_fully_observed(double sigma) {
  require_positive(sigma, "doyle_fully_observed: sigma");
  CatalogEntry e;
  e.name = "doyle_fully_observed";
  e.theta_star = 1.0;
  e.family.dim = 1;
  e.family.eval = [sigma](const Vector& th) {
    return PlantInstance(mat2(2, 1, 0, 2), col2(0, th(0)),
                         Matrix::Identity(2, 2), mat2(1, 1, 1, 1),
                         1e-8 * Matrix::Identity(2, 2), mat2(1, 1, 1, 1),
                         scalar(sigma));
  };
  e.family.derivative = [](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = Matrix::Zero(2, 2);
    d.B_dot = col2(0, v(0));
    d.C_dot = Matrix::Zero(2, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(2, 2);
    return d;
  };
  return e;
}

CatalogEntry nmp(double xi) {
  require_positive(xi, "nmp: xi");
  CatalogEntry e;
  e.name = "nmp";
  e.theta_star = 0.0;
  e.family.dim = 1;
  e.family.eval = [xi](const Vector& th) {
    return PlantInstance(mat2(1, 1, th(0), 1), col2(0, 1), row2(-xi, 1),
                         Matrix::Identity(2, 2), scalar(1),
                         Matrix::Identity(2, 2), scalar(1));
  };
  e.family.derivative = [](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = mat2(0, 0, v(0), 0);
    d.B_dot = Matrix::Zero(2, 1);
    d.C_dot = Matrix::Zero(1, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(1, 1);
    return d;
  };
  return e;
}

namespace {

CatalogEntry sensor_scaling(const char* name, double s, bool identity_noise) {
  CatalogEntry e;
  e.name = name;
  e.theta_star = 1.0;
  e.family.dim = 1;
  Matrix Sw = identity_noise ? Matrix::Identity(2, 2) : mat2(1, 1, 1, 1);
  e.family.eval = [s, Sw](const Vector& th) {
    return PlantInstance(mat2(th(0), 1, 0, 1), col2(0, 1), row2(1, s), Sw,
                         scalar(1), Matrix::Identity(2, 2), scalar(1));
  };
  e.family.derivative = [](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = mat2(v(0), 0, 0, 0);
    d.B_dot = Matrix::Zero(2, 1);
    d.C_dot = Matrix::Zero(1, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(1, 1);
    return d;
  };
  return e;
}

}  // namespace

CatalogEntry compounding(double s) { return sensor_scaling("compounding", s, false); }

CatalogEntry tradeoffs(double s) { return sensor_scaling("tradeoffs", s, true); }

CatalogEntry persistent_excitation_instance() {
  // Fully observed base system; the direction pairs B_dot = I with
  // A_dot = -B_dot F, so A_dot + B_dot F_tilde vanishes at the optimal
  // static gain while F_dot = -Psi^{-1} B_dot' P A_cl stays nonzero.
  Matrix A0 = mat2(1.1, 0.4, 0.0, 0.9);
  Matrix B0 = Matrix::Identity(2, 2);
  Matrix C0 = Matrix::Identity(2, 2);
  Matrix Sw = Matrix::Identity(2, 2);
  Matrix Sv = 1e-8 * Matrix::Identity(2, 2);
  Matrix Q = Matrix::Identity(2, 2);
  Matrix R = Matrix::Identity(2, 2);
  PlantInstance base(A0, B0, C0, Sw, Sv, Q, R);
  LqgSolution sol = synthesize(base);
  Matrix B_dot = Matrix::Identity(2, 2);
  Matrix A_dot = -B_dot * sol.F;

  CatalogEntry e;
  e.name = "pe_loss";
  e.theta_star = 0.0;
  e.family.dim = 1;
  e.family.eval = [=](const Vector& th) {
    return PlantInstance(A0 + th(0) * A_dot, B0 + th(0) * B_dot, C0, Sw, Sv,
                         Q, R);
  };
  e.family.derivative = [A_dot, B_dot](const Vector& th, const Vector& v) {
    PlantDerivatives d;
    d.A_dot = v(0) * A_dot;
    d.B_dot = v(0) * B_dot;
    d.C_dot = Matrix::Zero(2, 2);
    d.Sigma_w_dot = Matrix::Zero(2, 2);
    d.Sigma_v_dot = Matrix::Zero(2, 2);
    return d;
  };
  return e;
}

CatalogEntry catalog(const std::string& name, double param) {
  if (name == "doyle") return doyle(param);
  if (name == "doyle_stable") return doyle_stable(param);
  if (name == "doyle_fully_observed") return doyle_fully_observed(param);
  if (name == "nmp") return nmp(param);
  if (name == "compounding") return compounding(param);
  if (name == "tradeoffs") return tradeoffs(param);
  if (name == "pe_loss") return persistent_excitation_instance();
  throw InvalidInstance("unknown catalog instance: " + name);
}

RateFit rate_fit(const std::vector<double>& grid,
                 const std::vector<double>& values) {
  if (grid.size() < 3 || grid.size() != values.size())
    throw InvalidInstance("rate_fit: need >= 3 grid/value pairs");
  const int m = static_cast<int>(grid.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(m), ly(m);
  for (int i = 0; i < m; ++i) {
    if (!(grid[i] > 0.0) || !(values[i] > 0.0))
      throw NonPositive("rate_fit: grid and values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]) && !(grid[i] < grid[i - 1]))
      throw InvalidInstance("rate_fit: grid must be strictly monotone");
    lx[i] = std::log(grid[i]);
    ly[i] = std::log(values[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  for (int i = 2; i < m; ++i)
    if ((grid[i] > grid[i - 1]) != (grid[1] > grid[0]))
      throw InvalidInstance("rate_fit: grid must be strictly monotone");
  RateFit fit;
  fit.grid = grid;
  fit.values = values;
  double denom = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.log_constant = (sy - fit.slope * sx) / m;
  fit.constant = std::exp(fit.log_constant);
  double ss = 0;
  for (int i = 0; i < m; ++i) {
    double r = ly[i] - (fit.log_constant + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

double codesign_objective(
    const std::function<CatalogEntry(double)>& family_of_s, double s, int N,
    double probe_scale, const SolverConfig& cfg) {
  if (N < 1) throw InvalidInstance("codesign_objective: N must be >= 1");
  CatalogEntry entry = family_of_s(s);
  Vector theta = scalar_theta(entry.theta_star);
  Vector v = scalar_theta(1.0);
  double H = hessian_form_strict(entry.family, theta, v, cfg);
  double FI = fisher_rate_optimal_policy(entry.family, theta, probe_scale, v,
                                         cfg);
  double J = synthesize(entry.family.eval(theta), cfg).J_star;
  double obj = J + H / FI / N;
  if (!std::isfinite(obj))
    throw NonFiniteObjective("codesign_objective: objective not finite");
  return obj;
}

CodesignResult codesign_minimize(
    int N, double lo, double hi,
    const std::function<CatalogEntry(double)>& family_of_s, double probe_scale,
    const SolverConfig& cfg) {
  if (!(lo < hi)) throw BracketInvalid("codesign_minimize: need lo < hi");
  auto f = [&](double s) {
    return codesign_objective(family_of_s, s, N, probe_scale, cfg);
  };
  constexpr int kGrid = 33;
  // Geometric spacing when the range is positive: the design parameter spans
  // orders of magnitude and the objective varies on a multiplicative scale.
  const bool log_grid = lo > 0.0;
  auto grid_point = [&](int i) {
    const double t = static_cast<double>(i) / (kGrid - 1);
    return log_grid ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
  };
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    double v = f(grid_point(i));
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  if (!std::isfinite(best))
    throw NonFiniteObjective("codesign_minimize: objective not finite on grid");
  double a = grid_point(std::max(0, best_i - 1));
  double b = grid_point(std::min(kGrid - 1, best_i + 1));
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-6 * (1.0 + std::abs(a) + std::abs(b))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  CodesignResult res;
  res.s_star = 0.5 * (a + b);
  res.objective = f(res.s_star);
  if (res.objective > best) {
    // Grid point stays the minimizer if refinement did not improve on it.
    res.s_star = grid_point(best_i);
    res.objective = best;
  }
  res.at_boundary = (best_i == 0 || best_i == kGrid - 1);
  return res;
}

}  // namespace lqgh
