#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgdct {

/// Base for every library error; `what()` carries a human readable message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionerError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDerivativeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A parameter or state became non-finite. `step` is the update/step index,
/// `t` the model time at which it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step, double t)
      : Error(what + " (step " + std::to_string(step) + ", t=" + std::to_string(t) + ")"),
        step_(step),
        t_(t) {}

  std::int64_t step() const noexcept { return step_; }
  double t() const noexcept { return t_; }

 private:
  std::int64_t step_;
  double t_;
};

}  // namespace sgdct
