#include "lqgh/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace lqgh {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1]: never zero, so log() below is safe.
double to_unit(std::uint64_t z) {
  return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double CounterRng::normal(std::uint64_t replicate, std::uint64_t trajectory,
                          std::uint64_t t, std::uint64_t channel,
                          std::uint64_t index) const {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ replicate);
  s = splitmix64(s ^ trajectory);
  s = splitmix64(s ^ t);
  s = splitmix64(s ^ channel);
  s = splitmix64(s ^ index);
  double u1 = to_unit(splitmix64(s));
  double u2 = to_unit(splitmix64(~s));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int thread_cap() {
  if (const char* env = std::getenv("LQGH_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

namespace {

// Runs fn(i) for i in [0, count) across up to thread_cap() threads. Results
// must be written to preallocated, index-addressed storage by fn.
void parallel_for(int count, const std::function<void(int)>& fn) {
  int threads = std::min(thread_cap(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int tid = 0; tid < threads; ++tid) {
    pool.emplace_back([&, tid] {
      for (int i = tid; i < count; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Channels for the counter-based stream.
constexpr std::uint64_t kChanInit = 0;
constexpr std::uint64_t kChanProcess = 1;
constexpr std::uint64_t kChanMeasure = 2;
constexpr std::uint64_t kChanProbe = 3;

Matrix draw_block(const CounterRng& rng, std::uint64_t replicate, int rows,
                  int N, std::uint64_t t, std::uint64_t channel) {
  Matrix Z(rows, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < rows; ++i)
      Z(i, j) = rng.normal(replicate, static_cast<std::uint64_t>(j), t,
                           channel, static_cast<std::uint64_t>(i));
  return Z;
}

}  // namespace

Dataset simulate(const PlantInstance& plant, const ExplorationPolicy& policy,
                 int N, int T, std::uint64_t seed, std::uint64_t replicate,
                 const SolverConfig& cfg) {
  if (N < 1 || T < 1) throw InvalidInstance("simulate: N and T must be >= 1");
  const int n = plant.n(), dy = plant.dy(), du = plant.du();
  const int ne = policy.order();
  const int deta = static_cast<int>(policy.D_exp_eta.cols());
  if (policy.B_exp.cols() != dy || policy.C_exp.rows() != du ||
      policy.D_exp_y.rows() != du || policy.D_exp_y.cols() != dy ||
      policy.D_exp_eta.rows() != du)
    throw DimensionMismatch("simulate: policy dimensions");

  Matrix Sigma = solve_dare(plant.A.transpose(), plant.C.transpose(),
                            plant.Sigma_w, plant.Sigma_v, cfg);
  Matrix S0 = psd_sqrt(Sigma);
  Matrix Sw = psd_sqrt(plant.Sigma_w);
  Matrix Sv = psd_sqrt(plant.Sigma_v);

  CounterRng rng{seed};
  Dataset data;
  data.seed = seed;
  data.replicate = replicate;
  data.N = N;
  data.T = T;
  data.Y.reserve(T);
  data.U.reserve(T);

  Matrix X = S0 * draw_block(rng, replicate, n, N, 0, kChanInit);
  Matrix Xe = Matrix::Zero(ne, N);
  for (int t = 0; t < T; ++t) {
    Matrix Yt =
        plant.C * X + Sv * draw_block(rng, replicate, dy, N, t, kChanMeasure);
    Matrix Ut = policy.D_exp_y * Yt;
    if (ne > 0) Ut.noalias() += policy.C_exp * Xe;
    Matrix Et;
    if (deta > 0) {
      Et = draw_block(rng, replicate, deta, N, t, kChanProbe);
      Ut.noalias() += policy.D_exp_eta * Et;
    }
    Matrix Xn = plant.A * X + plant.B * Ut +
                Sw * draw_block(rng, replicate, n, N, t, kChanProcess);
    if (ne > 0) {
      Xe = (policy.A_exp * Xe + policy.B_exp * Yt).eval();
      if (deta > 0 && policy.B_exp_eta.size() > 0)
        Xe.noalias() += policy.B_exp_eta * Et;
    }
    X = std::move(Xn);
    data.Y.push_back(std::move(Yt));
    data.U.push_back(std::move(Ut));
  }
  return data;
}

std::string Dataset::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  const int dy = T > 0 ? static_cast<int>(Y[0].rows()) : 0;
  const int du = T > 0 ? static_cast<int>(U[0].rows()) : 0;
  out << "trajectory,t";
  for (int i = 0; i < dy; ++i) out << ",y_" << (i + 1);
  for (int i = 0; i < du; ++i) out << ",u_" << (i + 1);
  out << "\n";
  for (int j = 0; j < N; ++j)
    for (int t = 0; t < T; ++t) {
      out << j << "," << t;
      for (int i = 0; i < dy; ++i) out << "," << Y[t](i, j);
      for (int i = 0; i < du; ++i) out << "," << U[t](i, j);
      out << "\n";
    }
  return out.str();
}

double nll(const Dataset& data, const ParametricFamily& family,
           const Vector& theta, bool total, const SolverConfig& cfg) {
  PlantInstance plant = family.eval(theta);
  LqgSolution sol = synthesize(plant, cfg);
  const int n = plant.n();
  Eigen::LLT<Matrix> Se(sol.Sigma_e);
  if (Se.info() != Eigen::Success)
    throw IllPosed("nll: innovation covariance not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < plant.dy(); ++i)
    logdet += 2.0 * std::log(Se.matrixL()(i, i));

  Matrix Xhat = Matrix::Zero(n, data.N);
  double quad = 0.0;
  for (int t = 0; t < data.T; ++t) {
    Matrix E = data.Y[t] - plant.C * Xhat;
    quad += Se.matrixL().solve(E).squaredNorm();
    Xhat = (sol.A_cl_o * Xhat + sol.L * data.Y[t] + plant.B * data.U[t]).eval();
  }
  double scale = total ? 1.0 : 1.0 / data.N;
  double logdet_count = total ? static_cast<double>(data.N) : 1.0;
  return 0.5 * quad * scale + 0.5 * data.T * logdet * logdet_count;
}

MleResult mle_scalar(const Dataset& data, const ParametricFamily& family,
                     double lo, double hi, const SolverConfig& cfg) {
  if (!(lo < hi)) throw BracketInvalid("mle_scalar: need lo < hi");
  auto f = [&](double t) {
    try {
      return nll(data, family, scalar_theta(t), false, cfg);
    } catch (const SolverError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  // Coarse scan for a unimodal bracket, then golden section.
  constexpr int kGrid = 33;
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  std::vector<double> fs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    double t = lo + (hi - lo) * i / (kGrid - 1);
    fs[i] = f(t);
    if (fs[i] < best) {
      best = fs[i];
      best_i = i;
    }
  }
  if (!std::isfinite(best))
    throw NonFiniteObjective("mle_scalar: objective not finite on bracket");
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / (kGrid - 1);
  double b = lo + (hi - lo) * std::min(kGrid - 1, best_i + 1) / (kGrid - 1);

  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  double tol = 1e-8;
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
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
  double xm = 0.5 * (a + b);
  double fm = f(xm);
  // One parabolic refinement through (a, xm, b).
  {
    double fa = f(a), fb = f(b);
    double num = (xm - a) * (xm - a) * (fm - fb) -
                 (xm - b) * (xm - b) * (fm - fa);
    double den = (xm - a) * (fm - fb) - (xm - b) * (fm - fa);
    if (std::isfinite(fa) && std::isfinite(fb) && std::isfinite(fm) &&
        std::abs(den) > 0) {
      double xp = xm - 0.5 * num / den;
      if (xp > lo && xp < hi && std::isfinite(xp)) {
        double fp = f(xp);
        if (fp < fm) {
          xm = xp;
          fm = fp;
        }
      }
    }
  }

  MleResult res;
  res.theta_hat = xm;
  res.value = fm;
  res.at_boundary = (xm - lo < 1e-6 * (1.0 + std::abs(lo))) ||
                    (hi - xm < 1e-6 * (1.0 + std::abs(hi)));
  return res;
}

namespace {

CePipelineResult run_pipeline(
    const ParametricFamily& data_family, double theta_true,
    const ParametricFamily& model_family, double bracket_lo, double bracket_hi,
    const ExplorationPolicy& policy, int N, int T, int replicates,
    std::uint64_t seed, const SolverConfig& cfg) {
  if (replicates < 1)
    throw InvalidInstance("pipeline: replicates must be >= 1");
  PlantInstance truth = data_family.at(theta_true);
  double J_star = synthesize(truth, cfg).J_star;

  struct Slot {
    bool ok = false;
    double theta_hat = 0.0;
    double excess = 0.0;
  };
  std::vector<Slot> slots(replicates);
  parallel_for(replicates, [&](int r) {
    Dataset data = simulate(truth, policy, N, T, seed,
                            static_cast<std::uint64_t>(r), cfg);
    MleResult mle = mle_scalar(data, model_family, bracket_lo, bracket_hi, cfg);
    Slot& s = slots[r];
    s.theta_hat = mle.theta_hat;
    try {
      PlantInstance model = model_family.at(mle.theta_hat);
      LinearController K = lqg_controller(synthesize(model, cfg), model);
      s.excess = evaluate_cost(truth, K, cfg) - J_star;
      s.ok = true;
    } catch (const SolverError&) {
      s.ok = false;
    }
  });

  CePipelineResult res;
  res.N = N;
  res.T = T;
  res.replicates = replicates;
  bool clipped = false;
  for (const Slot& s : slots) {
    if (!s.ok) {
      ++res.failures;
      continue;
    }
    double e = s.excess;
    if (e < -1e-9) clipped = true;
    e = std::max(e, 0.0);
    res.theta_hats.push_back(s.theta_hat);
    res.excess.push_back(e);
  }
  if (clipped)
    res.warnings.push_back(
        "negative excess sample below -1e-9 clipped to zero");
  if (!res.excess.empty()) {
    double sum = 0.0;
    for (double e : res.excess) sum += e;
    res.mean_excess = sum / res.excess.size();
    double var = 0.0;
    for (double e : res.excess) var += (e - res.mean_excess) * (e - res.mean_excess);
    if (res.excess.size() > 1) var /= (res.excess.size() - 1);
    res.std_error = std::sqrt(var / res.excess.size());
  }
  return res;
}

}  // namespace

CePipelineResult ce_pipeline(const ParametricFamily& family, double theta_true,
                             const ExplorationPolicy& policy, int N, int T,
                             int replicates, std::uint64_t seed,
                             double bracket_lo, double bracket_hi,
                             const SolverConfig& cfg) {
  return run_pipeline(family, theta_true, family, bracket_lo, bracket_hi,
                      policy, N, T, replicates, seed, cfg);
}

CePipelineResult ce_pipeline(const ParametricFamily& family, double theta_true,
                             const ExplorationPolicy& policy, int N, int T,
                             int replicates, std::uint64_t seed,
                             const SolverConfig& cfg) {
  return ce_pipeline(family, theta_true, policy, N, T, replicates, seed,
                     theta_true - 0.5, theta_true + 0.5, cfg);
}

CePipelineResult misspecified_pipeline(const ParametricFamily& family,
                                       double theta_true, double epsilon,
                                       const ExplorationPolicy& policy, int N,
                                       int T, int replicates,
                                       std::uint64_t seed,
                                       const SolverConfig& cfg) {
  PlantInstance truth = family.at(theta_true);
  if (truth.du() != 1 || truth.n() != 2)
    throw InvalidInstance(
        "misspecified_pipeline: expects a single-input two-state family");
  // Learner's model class: actuation matrix [theta; 1 + epsilon], all other
  // matrices taken from the true plant.
  ParametricFamily model;
  model.dim = 1;
  model.eval = [truth, epsilon](const Vector& th) {
    Matrix B(2, 1);
    B << th(0), 1.0 + epsilon;
    return PlantInstance(truth.A, B, truth.C, truth.Sigma_w, truth.Sigma_v,
                         truth.Q, truth.R);
  };
  model.derivative = [truth](const Vector&, const Vector& v) {
    PlantDerivatives d = PlantDerivatives::zero(truth);
    d.B_dot(0, 0) = v(0);
    return d;
  };
  return run_pipeline(family, theta_true, model, -0.5, 0.5, policy, N, T,
                      replicates, seed, cfg);
}

double empirical_fisher(const ParametricFamily& family, const Vector& theta,
                        const ExplorationPolicy& policy, int T, int replicates,
                        std::uint64_t seed, const SolverConfig& cfg) {
  if (family.dim != 1 || theta.size() != 1)
    throw InvalidInstance("empirical_fisher: scalar parameter expected");
  PlantInstance plant = family.eval(theta);
  const double h = 1e-4;
  std::vector<double> curv(replicates);
  parallel_for(replicates, [&](int r) {
    Dataset data = simulate(plant, policy, 1, T, seed,
                            static_cast<std::uint64_t>(r), cfg);
    double fp = nll(data, family, scalar_theta(theta(0) + h), false, cfg);
    double f0 = nll(data, family, theta, false, cfg);
    double fm = nll(data, family, scalar_theta(theta(0) - h), false, cfg);
    curv[r] = (fp - 2.0 * f0 + fm) / (h * h);
  });
  double sum = 0.0;
  for (double c : curv) sum += c;
  return sum / replicates;
}

std::string CePipelineResult::to_json() const {
  nlohmann::json j;
  j["theta_hats"] = theta_hats;
  j["excess"] = excess;
  j["mean_excess"] = mean_excess;
  j["std_error"] = std_error;
  j["N"] = N;
  j["T"] = T;
  j["replicates"] = replicates;
  j["failures"] = failures;
  j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace lqgh
