#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qshoot/nonlinearity.hpp"
#include "qshoot/shooting.hpp"

namespace qshoot {

/// Flat run configuration. Files hold `key=value` lines ('#' comments allowed);
/// command-line flags are applied on top with the same keys.
struct RunConfig {
  std::string family = "pow_exp";
  double lambda = 1.0;
  double a = 1.0;
  double q = 1.5;
  double p = 1.0;
  double b = 1.0;
  std::string rho_table;
  int n = 2;
  double beta = 0.0;  ///< singular weight |x|^{-beta}
  std::optional<double> gamma;
  std::optional<double> gamma_min;
  std::optional<double> gamma_max;
  int gamma_steps = 11;
  double tol = 1e-10;
  double atol = 1e-12;
  double tail_c = 6.0;
  std::string route = "auto";
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 20240501;
  int threads = 0;

  /// Set one key from its textual value. Unknown keys and malformed values throw ConfigError naming the key.
  void set(const std::string& key, const std::string& value);

  /// All keys in canonical order.
  static const std::vector<std::string>& keys();

  /// One `key=value` line per key in canonical order; parse(canonical()) reproduces it exactly.
  std::string canonical() const;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  Nonlinearity nonlinearity() const;
  ShootConfig shoot_config() const;

  /// Explicit gamma grid from gamma_min/max/steps (log spaced), or {gamma}.
  std::vector<double> gamma_grid() const;
  bool has_grid() const { return gamma_min.has_value() && gamma_max.has_value(); }
};

}  // namespace qshoot
