#pragma once

#include <stdexcept>
#include <string>

namespace pvagg {

/// Invalid argument or violated precondition (bad grid, empty fleet, S <= 0...).
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: non-convergence, Hamiltonian with imaginary-axis
/// eigenvalues, non-finite state during integration.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A power request exceeded what the lookup table can deliver. Carries the value
/// the request was clamped to so callers can keep running at the limit.
class SaturationError : public std::runtime_error {
  public:
    SaturationError(const std::string& what, double clamped)
        : std::runtime_error(what), clamped_(clamped) {}

    double clamped() const noexcept { return clamped_; }

  private:
    double clamped_;
};

/// Scenario configuration problem. `key` names the offending entry.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string& constraint)
        : std::runtime_error(key + ": " + constraint), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

}  // namespace pvagg
