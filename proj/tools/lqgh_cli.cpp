// Command-line front end: analyze / sweep / montecarlo / codesign /
// youla-check over catalog instances or JSON-described plants.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lqgh/instances.hpp"
#include "lqgh/simulate.hpp"
#include "lqgh/youla.hpp"

using json = nlohmann::json;
using namespace lqgh;

namespace {

constexpr const char* kSchemaVersion = "1";
constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InvalidInstance("expected a nested array for a matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw InvalidInstance("ragged matrix rows");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInstance("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_file(const std::string& s) {
  if (s.size() > 5 && s.substr(s.size() - 5) == ".json") return true;
  return s.find('/') != std::string::npos;
}

// Resolves --instance into a catalog entry. Accepts a catalog name
// ("doyle", "nmp:xi=0.05", ...) with the parameter either inline or via
// --param, or a path to a JSON file describing the plant and (optionally)
// its parameter-direction derivatives.
CatalogEntry resolve_instance(const std::string& spec, double param,
                              bool param_given) {
  if (looks_like_file(spec)) {
    json j = json::parse(read_file(spec));
    PlantInstance base = PlantInstance::from_json(j.dump());
    double theta_star = j.value("theta_star", 0.0);
    PlantDerivatives d = PlantDerivatives::zero(base);
    bool has_dots = false;
    auto load = [&](const char* key, Matrix& target) {
      if (j.contains(key)) {
        target = matrix_from_json(j[key]);
        has_dots = true;
      }
    };
    load("A_dot", d.A_dot);
    load("B_dot", d.B_dot);
    load("C_dot", d.C_dot);
    load("Sigma_w_dot", d.Sigma_w_dot);
    load("Sigma_v_dot", d.Sigma_v_dot);
    if (!has_dots) d.A_dot = Matrix::Identity(base.n(), base.n());

    CatalogEntry entry;
    entry.name = spec;
    entry.theta_star = theta_star;
    entry.family.dim = 1;
    entry.family.eval = [base, d, theta_star](const Vector& th) {
      const double s = th(0) - theta_star;
      return PlantInstance(base.A + s * d.A_dot, base.B + s * d.B_dot,
                           base.C + s * d.C_dot,
                           base.Sigma_w + s * d.Sigma_w_dot,
                           base.Sigma_v + s * d.Sigma_v_dot, base.Q, base.R);
    };
    entry.family.derivative = [d](const Vector&, const Vector& v) {
      return d.scaled(v(0));
    };
    return entry;
  }

  std::string name = spec;
  double p = param;
  bool have_p = param_given;
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    name = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    auto eq = rest.find('=');
    if (eq != std::string::npos) rest = rest.substr(eq + 1);
    p = std::stod(rest);
    have_p = true;
  }
  if (!have_p) {
    if (name == "doyle" || name == "doyle_stable" ||
        name == "doyle_fully_observed")
      p = 1e-3;
    else if (name == "nmp")
      p = 0.1;
    else
      p = 10.0;
  }
  return catalog(name, p);
}

ExplorationPolicy resolve_policy(const std::string& spec,
                                 const PlantInstance& plant,
                                 const LqgSolution& sol) {
  if (spec == "optimal") return ExplorationPolicy::optimal_lqg(plant, sol, 0.0);
  const std::string noise_prefix = "optimal+noise:";
  if (spec.rfind(noise_prefix, 0) == 0) {
    double eta = std::stod(spec.substr(noise_prefix.size()));
    return ExplorationPolicy::optimal_lqg(plant, sol, eta);
  }
  const std::string static_prefix = "static:";
  if (spec.rfind(static_prefix, 0) == 0) {
    json j = json::parse(read_file(spec.substr(static_prefix.size())));
    Matrix F = matrix_from_json(j.at("F"));
    double eta = j.value("eta", 0.0);
    return ExplorationPolicy::static_gain(F, plant.dy(), eta);
  }
  const std::string custom_prefix = "custom:";
  if (spec.rfind(custom_prefix, 0) == 0) {
    json j = json::parse(read_file(spec.substr(custom_prefix.size())));
    ExplorationPolicy pol;
    pol.A_exp = matrix_from_json(j.at("A_exp"));
    pol.B_exp = matrix_from_json(j.at("B_exp"));
    pol.C_exp = matrix_from_json(j.at("C_exp"));
    pol.D_exp_y = matrix_from_json(j.at("D_exp_y"));
    pol.D_exp_eta = matrix_from_json(j.at("D_exp_eta"));
    return pol;
  }
  throw InvalidInstance("unknown policy: " + spec);
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  auto parse_range = [&](const std::string& body, bool log_spaced) {
    std::vector<double> parts;
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
    if (parts.size() != 3)
      throw InvalidInstance("grid range must be lo:hi:count");
    const double lo = parts[0], hi = parts[1];
    const int k = static_cast<int>(parts[2]);
    if (k < 2 || (log_spaced && (lo <= 0.0 || hi <= 0.0)))
      throw InvalidInstance("bad grid range");
    for (int i = 0; i < k; ++i) {
      const double t = static_cast<double>(i) / (k - 1);
      grid.push_back(log_spaced ? std::exp(std::log(lo) +
                                           t * (std::log(hi) - std::log(lo)))
                                : lo + t * (hi - lo));
    }
  };
  if (spec.rfind("log:", 0) == 0) {
    parse_range(spec.substr(4), true);
  } else if (spec.rfind("lin:", 0) == 0) {
    parse_range(spec.substr(4), false);
  } else {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw InvalidInstance("empty grid");
  return grid;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << std::endl;
  } else {
    std::ofstream out(out_path);
    if (!out) throw InvalidInstance("cannot open output file: " + out_path);
    out << text << "\n";
  }
}

struct CommonOpts {
  std::string instance;
  double param = 0.0;
  bool param_given = false;
  std::string policy = "optimal";
  int N = 100;
  int T = 500;
  int replicates = 200;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_mc) {
  cmd->add_option("--instance", o.instance,
                  "catalog name (optionally name:key=value) or JSON file")
      ->required();
  cmd->add_option("--param", o.param, "instance parameter (sigma / xi / s)")
      ->each([&o](const std::string&) { o.param_given = true; });
  cmd->add_option("--policy", o.policy,
                  "optimal | optimal+noise:ETA | static:FILE | custom:FILE");
  cmd->add_option("--N", o.N, "number of trajectories");
  cmd->add_option("--T", o.T, "trajectory length");
  if (with_mc) cmd->add_option("--replicates", o.replicates, "replicates");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--out", o.out, "output file (default stdout)");
  cmd->add_option("--format", o.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

int cmd_analyze(const CommonOpts& o, bool finite_T) {
  CatalogEntry entry = resolve_instance(o.instance, o.param, o.param_given);
  Vector theta = scalar_theta(entry.theta_star);
  PlantInstance plant = entry.family.at(theta);
  LqgSolution sol = synthesize(plant);
  ExplorationPolicy policy = resolve_policy(o.policy, plant, sol);
  HardnessReport rep = hardness_report(entry.family, theta, policy, o.N, o.T,
                                       finite_T);
  json j = json::parse(rep.to_json());
  j["schema_version"] = kSchemaVersion;
  j["instance"] = entry.name;
  j["theta_star"] = entry.theta_star;
  if (o.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "instance,theta_star,J_star,H,FI_rate,bound,ce_asymptote\n"
       << entry.name << ',' << entry.theta_star << ',' << rep.J_star << ','
       << rep.H(0, 0) << ',' << rep.FI_rate(0, 0) << ',' << rep.bound << ','
       << rep.ce_asymptote;
    emit(os.str(), o.out);
  } else {
    emit(j.dump(2), o.out);
  }
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& grid_spec) {
  std::vector<double> grid = parse_grid(grid_spec);
  std::string name = o.instance;
  auto colon = name.find(':');
  if (colon != std::string::npos) name = name.substr(0, colon);

  json rows = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "param,J_star,H,FI_rate,bound,warnings\n";
  std::vector<double> ok_grid, h_vals, fi_vals, j_vals, bound_vals;
  for (double g : grid) {
    json row;
    row["param"] = g;
    std::string warn;
    try {
      CatalogEntry entry = catalog(name, g);
      Vector theta = scalar_theta(entry.theta_star);
      PlantInstance plant = entry.family.at(theta);
      LqgSolution sol = synthesize(plant);
      ExplorationPolicy policy = resolve_policy(o.policy, plant, sol);
      HardnessReport rep =
          hardness_report(entry.family, theta, policy, o.N, o.T, false);
      row["J_star"] = rep.J_star;
      row["H"] = rep.H(0, 0);
      row["FI_rate"] = rep.FI_rate(0, 0);
      row["bound"] = rep.bound;
      for (const auto& w : rep.warnings) warn += (warn.empty() ? "" : ";") + w;
      csv << g << ',' << rep.J_star << ',' << rep.H(0, 0) << ','
          << rep.FI_rate(0, 0) << ',' << rep.bound << ",\"" << warn << "\"\n";
      ok_grid.push_back(g);
      h_vals.push_back(rep.H(0, 0));
      fi_vals.push_back(rep.FI_rate(0, 0));
      j_vals.push_back(rep.J_star);
      bound_vals.push_back(rep.bound);
    } catch (const SolverError& e) {
      warn = e.what();
      row["error"] = warn;
      csv << g << ",,,,,\"" << warn << "\"\n";
    }
    row["warnings"] = warn;
    rows.push_back(row);
  }

  if (o.format == "csv") {
    std::string s = csv.str();
    if (!s.empty() && s.back() == '\n') s.pop_back();
    emit(s, o.out);
    return 0;
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["instance"] = name;
  j["rows"] = rows;
  auto fit_of = [&](const std::vector<double>& vals) -> json {
    try {
      RateFit f = rate_fit(ok_grid, vals);
      return json{{"slope", f.slope}, {"constant", f.constant},
                  {"residual", f.residual}};
    } catch (const SolverError&) {
      return nullptr;
    }
  };
  if (ok_grid.size() >= 2) {
    j["fits"] = {{"H", fit_of(h_vals)},
                 {"FI_rate", fit_of(fi_vals)},
                 {"J_star", fit_of(j_vals)},
                 {"bound", fit_of(bound_vals)}};
  }
  emit(j.dump(2), o.out);
  return 0;
}

int cmd_montecarlo(const CommonOpts& o, double epsilon, bool has_epsilon) {
  CatalogEntry entry = resolve_instance(o.instance, o.param, o.param_given);
  Vector theta = scalar_theta(entry.theta_star);
  PlantInstance plant = entry.family.at(theta);
  LqgSolution sol = synthesize(plant);
  ExplorationPolicy policy = resolve_policy(o.policy, plant, sol);

  CePipelineResult res =
      has_epsilon
          ? misspecified_pipeline(entry.family, entry.theta_star, epsilon,
                                  policy, o.N, o.T, o.replicates, o.seed)
          : ce_pipeline(entry.family, entry.theta_star, policy, o.N, o.T,
                        o.replicates, o.seed);

  json j = json::parse(res.to_json());
  j["schema_version"] = kSchemaVersion;
  j["instance"] = entry.name;
  j["seed"] = o.seed;
  Vector v = Vector::Ones(1);
  try {
    const double H = hessian_form_strict(entry.family, theta, v);
    const double fi_T = fisher_finite_T(entry.family, theta, policy, v, o.T);
    const double theory = 0.5 * H / (fi_T * o.N);
    j["H"] = H;
    j["FI_finite_T"] = fi_T;
    j["theory_mean_excess"] = theory;
    if (theory > 0.0) j["empirical_over_theory"] = res.mean_excess / theory;
  } catch (const SolverError& e) {
    j["theory_error"] = std::string(e.what());
  }
  if (o.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "replicate,theta_hat,excess\n";
    for (std::size_t i = 0; i < res.theta_hats.size(); ++i)
      os << i << ',' << res.theta_hats[i] << ',' << res.excess[i] << "\n";
    std::string s = os.str();
    s.pop_back();
    emit(s, o.out);
  } else {
    emit(j.dump(2), o.out);
  }
  return 0;
}

int cmd_codesign(const std::string& instance, std::vector<int> Ns,
                 double s_lo, double s_hi, double probe,
                 const std::string& format, const std::string& out) {
  std::string name = instance;
  auto colon = name.find(':');
  if (colon != std::string::npos) name = name.substr(0, colon);
  auto fam = [name](double s) { return catalog(name, s); };
  if (Ns.empty()) Ns = {10, 100, 1000};

  json rows = json::array();
  json warnings = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "N,s_star,objective,at_boundary\n";
  for (int N : Ns) {
    CodesignResult r = codesign_minimize(N, s_lo, s_hi, fam, probe);
    rows.push_back({{"N", N},
                    {"s_star", r.s_star},
                    {"objective", r.objective},
                    {"at_boundary", r.at_boundary}});
    if (r.at_boundary)
      warnings.push_back("minimizer for N=" + std::to_string(N) +
                         " sits on the bracket boundary; widen [s_lo, s_hi]");
    csv << N << ',' << r.s_star << ',' << r.objective << ','
        << (r.at_boundary ? 1 : 0) << "\n";
  }
  if (format == "csv") {
    std::string s = csv.str();
    s.pop_back();
    emit(s, out);
    return 0;
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["instance"] = name;
  j["s_lo"] = s_lo;
  j["s_hi"] = s_hi;
  j["results"] = rows;
  j["warnings"] = warnings;
  emit(j.dump(2), out);
  return 0;
}

int cmd_youla_check(const CommonOpts& o, double detune) {
  CatalogEntry entry = resolve_instance(o.instance, o.param, o.param_given);
  PlantInstance plant = entry.nominal();
  LqgSolution sol = synthesize(plant);
  CoprimeFactors f = coprime_factorization(plant, sol);

  LinearController K;
  if (detune == 1.0) {
    K = lqg_controller(sol, plant);
  } else {
    Matrix Fd = detune * sol.F;
    K.realization = StateSpaceTF(plant.A - sol.L * plant.C + plant.B * Fd,
                                 sol.L, Fd, Matrix::Zero(plant.du(), plant.dy()));
    K.strictly_proper = true;
  }

  // Double-coprime identity residual on the unit circle.
  StateSpaceTF left = vstack(hstack(f.Vt, negate(f.Ut)),
                             hstack(negate(f.Nt), f.Mt));
  StateSpaceTF right = vstack(hstack(f.M, f.U), hstack(f.N, f.V));
  StateSpaceTF plant_tf(plant.A, plant.B, plant.C,
                        Matrix::Zero(plant.dy(), plant.du()));
  double id_resid = 0.0, plant_resid = 0.0, recon_resid = 0.0;
  const int grid_pts = 256;
  Matrix eye = Matrix::Identity(plant.du() + plant.dy(),
                                plant.du() + plant.dy());
  YoulaParameter yq = youla_parameter(K, f, plant);
  for (int i = 0; i < grid_pts; ++i) {
    const double w = M_PI * i / (grid_pts - 1);
    auto Lw = left.eval(w), Rw = right.eval(w);
    id_resid = std::max(id_resid, (Lw * Rw - eye).norm());
    auto Mw = f.M.eval(w), Nw = f.N.eval(w), Pw = plant_tf.eval(w);
    plant_resid = std::max(plant_resid, (Nw * Mw.inverse() - Pw).norm());
    auto Uw = f.U.eval(w), Vw = f.V.eval(w), Qw = yq.Q.eval(w);
    auto Kw = K.realization.eval(w);
    auto Krec = (Uw + Mw * Qw) * (Vw + Nw * Qw).inverse();
    recon_resid = std::max(recon_resid, (Krec - Kw).norm());
  }
  const double excess_q = excess_via_youla(yq, sol);
  const double excess_direct = evaluate_cost(plant, K) - sol.J_star;

  json j;
  j["schema_version"] = kSchemaVersion;
  j["instance"] = entry.name;
  j["detune"] = detune;
  j["coprime_identity_residual"] = id_resid;
  j["plant_factorization_residual"] = plant_resid;
  j["controller_reconstruction_residual"] = recon_resid;
  j["Q_order"] = yq.reduced_order;
  j["Q_order_before_truncation"] = yq.original_order;
  j["Q_hinf"] = hinf_norm(yq.Q);
  j["excess_via_Q"] = excess_q;
  j["excess_direct"] = excess_direct;
  if (o.format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "key,value\n";
    for (auto& [k, v] : j.items())
      os << k << ',' << (v.is_number() ? format_double(v.get<double>())
                                       : v.dump())
         << "\n";
    std::string s = os.str();
    s.pop_back();
    emit(s, o.out);
  } else {
    emit(j.dump(2), o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical hardness analysis for learned LQG control"};
  app.require_subcommand(1);

  CommonOpts a_opts, s_opts, m_opts, y_opts;
  bool finite_T = false;
  std::string grid_spec;
  double epsilon = 0.0;
  bool has_epsilon = false;
  double detune = 1.0;
  std::string cd_instance = "tradeoffs";
  std::vector<int> cd_N;
  double s_lo = 1.0, s_hi = 5000.0, cd_probe = 1.0;
  std::string cd_format = "json", cd_out;

  auto* analyze = app.add_subcommand(
      "analyze", "hardness report for one instance");
  add_common(analyze, a_opts, false);
  analyze->add_flag("--finite-T", finite_T,
                    "use the exact finite-horizon information");

  auto* sweep = app.add_subcommand(
      "sweep", "hardness report across a parameter grid");
  add_common(sweep, s_opts, false);
  sweep->add_option("--grid", grid_spec,
                    "comma list, or log:lo:hi:k / lin:lo:hi:k")
      ->required();

  auto* mc = app.add_subcommand(
      "montecarlo", "certainty-equivalence pipeline vs theory");
  add_common(mc, m_opts, true);
  mc->add_option("--epsilon", epsilon, "model misspecification size")
      ->each([&has_epsilon](const std::string&) { has_epsilon = true; });

  auto* cd = app.add_subcommand("codesign",
                                "optimal design parameter vs sample size");
  cd->add_option("--instance", cd_instance, "catalog family name");
  cd->add_option("--N", cd_N, "sample sizes (repeatable)");
  cd->add_option("--s-lo", s_lo, "design range lower end");
  cd->add_option("--s-hi", s_hi, "design range upper end");
  cd->add_option("--probe", cd_probe, "probing noise scale");
  cd->add_option("--out", cd_out, "output file (default stdout)");
  cd->add_option("--format", cd_format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* yc = app.add_subcommand("youla-check",
                                "coprime / Youla residual report");
  add_common(yc, y_opts, false);
  yc->add_option("--detune", detune, "scale the optimal gain F by this factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(a_opts, finite_T);
    if (app.got_subcommand(sweep)) return cmd_sweep(s_opts, grid_spec);
    if (app.got_subcommand(mc)) return cmd_montecarlo(m_opts, epsilon,
                                                      has_epsilon);
    if (app.got_subcommand(cd))
      return cmd_codesign(cd_instance, cd_N, s_lo, s_hi, cd_probe, cd_format,
                          cd_out);
    if (app.got_subcommand(yc)) return cmd_youla_check(y_opts, detune);
  } catch (const SingularFisher& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const NotStabilizing& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
