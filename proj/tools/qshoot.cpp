#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include "qshoot/config.hpp"
#include "qshoot/errors.hpp"
#include "qshoot/io.hpp"
#include "qshoot/linearization.hpp"
#include "qshoot/verify.hpp"

using namespace qshoot;

namespace {

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kVerify = 3 };

struct Flags {
  std::string config_file;
  std::map<std::string, std::string> values;  // key -> raw text, applied after the file
  std::string trajectory;
  std::string svg;
  bool derivative = false;
  std::string suite;
};

const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"family", "pow_exp | linear | exp | tabulated"},
    {"lambda", "multiplier lambda"},
    {"a", "coefficient of u^q"},
    {"q", "exponent q"},
    {"p", "coefficient of log u"},
    {"b", "coefficient of u"},
    {"rho-table", "CSV u,rho for family=tabulated"},
    {"n", "dimension n >= 2"},
    {"beta-weight", "singular weight |x|^-beta"},
    {"gamma", "single gamma = u(0)"},
    {"gamma-min", "log grid lower end"},
    {"gamma-max", "log grid upper end"},
    {"gamma-steps", "log grid size"},
    {"tol", "relative tolerance"},
    {"atol", "absolute tolerance"},
    {"tail-c", "tail start offset multiplier"},
    {"route", "auto | t | r"},
    {"out", "output path (stdout when absent)"},
    {"format", "csv | json"},
    {"seed", "seed for sample jitter"},
    {"threads", "worker count (0: QSHOOT_THREADS or cores)"},
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_file, "key=value config file");
  for (const auto& [name, help] : kFlags) {
    sub->add_option_function<std::string>("--" + name, [&f, key = name](const std::string& v) { f.values[key] = v; },
                                          help);
  }
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config_file.empty() ? RunConfig{} : RunConfig::load(f.config_file);
  for (const auto& [k, v] : f.values) cfg.set(k, v);
  return cfg;
}

void emit(const RunConfig& cfg, const std::string& content) {
  if (cfg.out.empty()) {
    std::cout << content;
  } else {
    io::atomic_write(cfg.out, content);
  }
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::ordered_json meta(const RunConfig& cfg, const Nonlinearity& nl) {
  auto m = io::meta_json(nl.describe(), cfg.n, cfg.beta, cfg.tol, cfg.atol);
  m["route"] = cfg.route;
  m["seed"] = cfg.seed;
  return m;
}

int cmd_shoot(const RunConfig& cfg, const Flags& f) {
  if (!cfg.gamma) throw ConfigError("shoot needs --gamma");
  const Nonlinearity nl = cfg.nonlinearity();
  const ShootResult res = shoot_with_trajectory(nl, cfg.n, *cfg.gamma, cfg.shoot_config());
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["meta"] = meta(cfg, nl);
    j["outcome"] = io::outcome_json(res.outcome);
    emit(cfg, dump(j));
  } else {
    BifurcationCurve c;
    c.rows.push_back({*cfg.gamma, res.outcome.found, "", res.outcome, std::nullopt, std::nullopt});
    emit(cfg, io::curve_csv(c, false));
  }
  if (!f.trajectory.empty()) {
    std::ostringstream os;
    write_trajectory_csv(res.trajectory, os);
    io::atomic_write(f.trajectory, os.str());
  }
  if (!res.outcome.found) {
    std::cerr << "error: no first zero for gamma=" << *cfg.gamma << " (" << res.outcome.status << ")\n";
    return kSolver;
  }
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, const Flags& f) {
  const Nonlinearity nl = cfg.nonlinearity();
  const BifurcationCurve c = sweep(nl, cfg.n, cfg.gamma_grid(), cfg.shoot_config(), f.derivative);
  emit(cfg, cfg.format == "json" ? dump(io::curve_json(c, f.derivative)) : io::curve_csv(c, f.derivative));
  std::string svg_path = f.svg;
  if (svg_path.empty() && !cfg.out.empty()) svg_path = cfg.out + ".svg";
  if (!svg_path.empty()) {
    std::vector<double> x, y;
    for (const SweepRow& r : c.rows) {
      if (!r.ok) continue;
      x.push_back(r.gamma);
      y.push_back(r.outcome.lambda_of_gamma);
    }
    io::atomic_write(svg_path, io::svg_polyline(x, y, "||u||_inf = gamma", "lambda", nl.describe()));
  }
  int failed = 0;
  for (const SweepRow& r : c.rows) {
    if (!r.ok) {
      std::cerr << "error: gamma=" << r.gamma << ": " << r.error << '\n';
      ++failed;
    }
  }
  return failed ? kSolver : kOk;
}

int cmd_linearize(const RunConfig& cfg, const Flags& f) {
  if (!cfg.has_grid() && !cfg.gamma) throw ConfigError("linearize needs --gamma or --gamma-min/--gamma-max");
  const Nonlinearity nl = cfg.nonlinearity();
  const ShootConfig sc = cfg.shoot_config();
  const BifurcationCurve c = sweep(nl, cfg.n, cfg.gamma_grid(), sc, true);
  const WindowReport w = uniqueness_window(c);

  // Turning report and V1 trajectory for the largest gamma of the grid.
  const double top = cfg.gamma_grid().back();
  const LinearizationResult L = solve_V1(nl, cfg.n, top, sc);
  std::optional<TurningReport> turn;
  try {
    turn = detect_turning(L.shot.trajectory, make_snapshot(nl, cfg.n, top), nl.params().q);
  } catch (const DomainError&) {
  }

  if (cfg.format == "json") {
    nlohmann::ordered_json j = io::curve_json(c, true);
    j["window"] = {{"gamma0", w.gamma0 ? nlohmann::ordered_json(*w.gamma0) : nlohmann::ordered_json(nullptr)},
                   {"exists", w.exists}};
    if (turn) j["turning"] = io::turning_json(*turn);
    emit(cfg, dump(j));
  } else {
    emit(cfg, io::curve_csv(c, true));
  }
  if (!f.trajectory.empty()) {
    std::ostringstream os;
    write_linearization_csv(L.shot.trajectory, os);
    io::atomic_write(f.trajectory, os.str());
  }
  std::cerr << "gamma0=" << (w.gamma0 ? io::num(*w.gamma0) : "none") << " window=" << (w.exists ? "yes" : "no")
            << '\n';
  for (const SweepRow& r : c.rows) {
    if (!r.ok) return kSolver;
  }
  return kOk;
}

int cmd_verify(const RunConfig& cfg, const Flags& f) {
  const VerifyReport rep = run_suite(f.suite, cfg);
  emit(cfg, cfg.format == "json" ? dump(rep.json()) : rep.table());
  return rep.all_pass() ? kOk : kVerify;
}

int cmd_regimes(const RunConfig& cfg, const Flags&) {
  const Nonlinearity nl = cfg.nonlinearity();
  const double hi = cfg.gamma_max.value_or(1e-1), lo = cfg.gamma_min.value_or(1e-4);
  if (!(hi > lo && lo > 0.0)) throw ConfigError("regimes needs 0 < gamma_min < gamma_max");
  std::vector<double> grid = log_grid(lo, hi, cfg.gamma_steps);
  std::reverse(grid.begin(), grid.end());
  const RegimeReport r = classify_small_gamma(nl, cfg.n, grid, cfg.shoot_config());
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["meta"] = meta(cfg, nl);
    j["label"] = to_string(r.label);
    j["expected"] = to_string(r.expected);
    j["slope"] = r.slope;
    j["p_estimate"] = r.p_estimate;
    j["sup_T"] = r.sup_T;
    j["gamma"] = r.gamma;
    j["T"] = r.T;
    emit(cfg, dump(j));
  } else {
    std::ostringstream os;
    os << "# label=" << to_string(r.label) << " expected=" << to_string(r.expected) << " slope=" << io::num(r.slope)
       << " p_estimate=" << io::num(r.p_estimate) << '\n'
       << "gamma,T\n";
    for (std::size_t i = 0; i < r.gamma.size(); ++i) os << io::num(r.gamma[i]) << ',' << io::num(r.T[i]) << '\n';
    emit(cfg, os.str());
  }
  return kOk;
}

int cmd_singular(const RunConfig& cfg, const Flags&) {
  const Nonlinearity nl = cfg.nonlinearity();
  const ShootConfig sc = cfg.shoot_config();
  std::ostringstream os;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  os << "gamma,T,R,lambda\n";
  for (double g : cfg.gamma_grid()) {
    const SingularOutcome so = shoot_singular(nl, cfg.n, cfg.beta, g, sc);
    os << io::num(g) << ',' << io::num(so.T) << ',' << io::num(so.R) << ',' << io::num(so.lambda) << '\n';
    rows.push_back({{"gamma", g}, {"T", so.T}, {"R", so.R}, {"lambda", so.lambda}});
  }
  if (cfg.format == "json") {
    nlohmann::ordered_json j;
    j["meta"] = meta(cfg, nl);
    j["rows"] = rows;
    emit(cfg, dump(j));
  } else {
    emit(cfg, os.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shooting solver for radial n-Laplace problems with exponential nonlinearity"};
  app.require_subcommand(1);
  Flags f;

  auto* shoot_cmd = app.add_subcommand("shoot", "first zero T, R and lambda for one gamma");
  add_common(shoot_cmd, f);
  shoot_cmd->add_option("--trajectory", f.trajectory, "also write the trajectory CSV here");

  auto* sweep_cmd = app.add_subcommand("sweep", "bifurcation curve over a gamma grid");
  add_common(sweep_cmd, f);
  sweep_cmd->add_flag("--derivative", f.derivative, "add T' from the linearization and finite differences");
  sweep_cmd->add_option("--svg", f.svg, "SVG path (default <out>.svg when --out is given)");

  auto* lin_cmd = app.add_subcommand("linearize", "T' table, turning points and the uniqueness window");
  add_common(lin_cmd, f);
  lin_cmd->add_option("--trajectory", f.trajectory, "V1 trajectory CSV for the largest gamma");

  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  add_common(verify_cmd, f);
  verify_cmd->add_option("suite", f.suite, "identities | oracles | asymptotics | regimes")
      ->required()
      ->check(CLI::IsMember(suite_names()));

  auto* reg_cmd = app.add_subcommand("regimes", "behaviour of T as gamma -> 0");
  add_common(reg_cmd, f);

  auto* sing_cmd = app.add_subcommand("singular", "problems with weight |x|^-beta");
  add_common(sing_cmd, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (*shoot_cmd) return cmd_shoot(cfg, f);
    if (*sweep_cmd) return cmd_sweep(cfg, f);
    if (*lin_cmd) return cmd_linearize(cfg, f);
    if (*verify_cmd) return cmd_verify(cfg, f);
    if (*reg_cmd) return cmd_regimes(cfg, f);
    if (*sing_cmd) return cmd_singular(cfg, f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
  return kConfig;
}
