#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qshoot/config.hpp"

namespace qshoot {

struct CheckRow {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<CheckRow> rows;

  bool all_pass() const;
  /// Fixed-width table, one line per check. Contains no timings.
  std::string table() const;
  nlohmann::ordered_json json() const;
};

/// identities, oracles, asymptotics, regimes
const std::vector<std::string>& suite_names();

/// Throws ConfigError for an unknown suite. Deterministic for a given config.
VerifyReport run_suite(const std::string& suite, const RunConfig& cfg);

VerifyReport verify_identities(const RunConfig& cfg);
VerifyReport verify_oracles(const RunConfig& cfg);
VerifyReport verify_asymptotics(const RunConfig& cfg);
VerifyReport verify_regimes(const RunConfig& cfg);

}  // namespace qshoot
