#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace impacteq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quadrature integrand returned a non-finite value.
class IntegrationError : public Error {
 public:
  explicit IntegrationError(double abscissa)
      : Error("integrand is not finite at t = " + std::to_string(abscissa)),
        abscissa_(abscissa) {}

  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

/// A caller broke a documented precondition (e.g. monotonicity).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Time argument outside [0, T].
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical state that the closed form rules out (e.g. a vanishing
/// denominator after the last trading time).
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Input specification failed validation; carries every violation found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid market specification";
    for (const auto& s : v) {
      out += "; ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace impacteq
