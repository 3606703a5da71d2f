#pragma once

#include <stdexcept>
#include <string>

namespace pointerlab {

/// Raised when a numerical guard trips (normalization, boundary mass, step size, blowup).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for invalid user-facing configuration; carries the offending field.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

}  // namespace pointerlab
