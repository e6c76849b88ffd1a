#pragma once

#include <stdexcept>
#include <string>

namespace qshoot {

/// Argument outside the mathematical domain of an operation (e.g. u = 0 where u^{q-k} is singular).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An exponent would leave the representable range of double.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Integrator or root-finder failure. Carries the last state that was accepted.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_x = 0.0, double last_y = 0.0)
      : std::runtime_error(what), last_x_(last_x), last_y_(last_y) {}
  double last_x() const noexcept { return last_x_; }
  double last_y() const noexcept { return last_y_; }

 private:
  double last_x_;
  double last_y_;
};

/// Invalid user configuration (CLI or config file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qshoot
