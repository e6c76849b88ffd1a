#include "qshoot/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "qshoot/errors.hpp"

namespace qshoot {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("invalid value for '" + key + "': '" + value + "' (expected " + want + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc() || ptr != end) bad(key, v, "a number");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc() || ptr != end) bad(key, v, "an integer");
  return x;
}

std::string num(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : ""; }

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "family", "lambda", "a",  "q",     "p",          "b",    "rho_table", "n",  "beta",
      "gamma",  "gamma_min", "gamma_max", "gamma_steps", "tol", "atol", "tail_c", "route",
      "out",    "format", "seed", "threads"};
  return k;
}

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  std::string key = trim(key_in);
  for (auto& c : key) if (c == '-') c = '_';
  const std::string v = trim(value_in);
  if (key == "family") {
    family_from_string(v);
    family = v;
  } else if (key == "lambda") {
    lambda = to_double(key, v);
    if (!(lambda > 0.0)) bad(key, v, "a positive number");
  } else if (key == "a") {
    a = to_double(key, v);
  } else if (key == "q") {
    q = to_double(key, v);
  } else if (key == "p") {
    p = to_double(key, v);
  } else if (key == "b") {
    b = to_double(key, v);
  } else if (key == "rho_table") {
    rho_table = v;
  } else if (key == "n") {
    const long long x = to_integer(key, v);
    if (x < 2 || x > 64) bad(key, v, "an integer in [2, 64]");
    n = static_cast<int>(x);
  } else if (key == "beta" || key == "beta_weight") {
    beta = to_double(key, v);
  } else if (key == "gamma") {
    gamma = v.empty() ? std::nullopt : std::optional<double>(to_double(key, v));
  } else if (key == "gamma_min") {
    gamma_min = v.empty() ? std::nullopt : std::optional<double>(to_double(key, v));
  } else if (key == "gamma_max") {
    gamma_max = v.empty() ? std::nullopt : std::optional<double>(to_double(key, v));
  } else if (key == "gamma_steps") {
    const long long x = to_integer(key, v);
    if (x < 1) bad(key, v, "a positive integer");
    gamma_steps = static_cast<int>(x);
  } else if (key == "tol") {
    tol = to_double(key, v);
    if (!(tol > 0.0)) bad(key, v, "a positive number");
  } else if (key == "atol") {
    atol = to_double(key, v);
    if (!(atol > 0.0)) bad(key, v, "a positive number");
  } else if (key == "tail_c") {
    tail_c = to_double(key, v);
    if (!(tail_c > 0.0)) bad(key, v, "a positive number");
  } else if (key == "route") {
    route_from_string(v);
    route = v;
  } else if (key == "out") {
    out = v;
  } else if (key == "format") {
    if (v != "csv" && v != "json") bad(key, v, "csv or json");
    format = v;
  } else if (key == "seed") {
    const long long x = to_integer(key, v);
    if (x < 0) bad(key, v, "a nonnegative integer");
    seed = static_cast<std::uint64_t>(x);
  } else if (key == "threads") {
    const long long x = to_integer(key, v);
    if (x < 0) bad(key, v, "a nonnegative integer");
    threads = static_cast<int>(x);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "family=" << family << '\n'
     << "lambda=" << num(lambda) << '\n'
     << "a=" << num(a) << '\n'
     << "q=" << num(q) << '\n'
     << "p=" << num(p) << '\n'
     << "b=" << num(b) << '\n'
     << "rho_table=" << rho_table << '\n'
     << "n=" << n << '\n'
     << "beta=" << num(beta) << '\n'
     << "gamma=" << opt(gamma) << '\n'
     << "gamma_min=" << opt(gamma_min) << '\n'
     << "gamma_max=" << opt(gamma_max) << '\n'
     << "gamma_steps=" << gamma_steps << '\n'
     << "tol=" << num(tol) << '\n'
     << "atol=" << num(atol) << '\n'
     << "tail_c=" << num(tail_c) << '\n'
     << "route=" << route << '\n'
     << "out=" << out << '\n'
     << "format=" << format << '\n'
     << "seed=" << seed << '\n'
     << "threads=" << threads << '\n';
  return os.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
    }
    cfg.set(t.substr(0, eq), t.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Nonlinearity RunConfig::nonlinearity() const {
  const Family fam = family_from_string(family);
  try {
    switch (fam) {
      case Family::linear: return Nonlinearity::linear(lambda);
      case Family::exp: return Nonlinearity::exponential(lambda);
      case Family::pow_exp: return Nonlinearity::pow_exp(lambda, a, q, p, b);
      case Family::tabulated:
        if (rho_table.empty()) throw ConfigError("family=tabulated needs rho_table");
        return Nonlinearity::tabulated(lambda, a, q, p, b, TabulatedRho::from_csv(rho_table));
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("nonlinearity: ") + e.what());
  }
  throw ConfigError("unknown family");
}

ShootConfig RunConfig::shoot_config() const {
  ShootConfig c;
  c.integ.rtol = tol;
  c.integ.atol = atol;
  c.c_tail = tail_c;
  c.route = route_from_string(route);
  c.threads = static_cast<std::size_t>(threads);
  return c;
}

std::vector<double> RunConfig::gamma_grid() const {
  if (has_grid()) return log_grid(*gamma_min, *gamma_max, gamma_steps);
  if (gamma) return {*gamma};
  throw ConfigError("no gamma given (use --gamma or --gamma-min/--gamma-max)");
}

}  // namespace qshoot
