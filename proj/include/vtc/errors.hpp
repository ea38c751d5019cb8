#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vtc {

/// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid problem data (dimensions, threshold, control box, missing derivatives).
class ProblemError : public Error {
 public:
  using Error::Error;
};

/// Unknown builtin problem name.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// A control value lies outside the control box.
class BoxViolation : public Error {
 public:
  using Error::Error;
};

/// Two objects that must share a time grid do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Non-finite state during simulation.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, std::size_t path, std::size_t node)
      : Error(what), path_(path), node_(node) {}
  std::size_t path() const noexcept { return path_; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t path_;
  std::size_t node_;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// h(tau) is (numerically) zero, so the terminal-time derivative does not exist.
class DegenerateRate : public Error {
 public:
  using Error::Error;
};

/// h is discontinuous at tau, so the terminal-time derivative does not exist.
class Discontinuity : public Error {
 public:
  using Error::Error;
};

/// Regression backend has too few paths for its basis.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// Adjoint requested on an empty interval [0, tau] with tau = 0.
class DegenerateInterval : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration error; carries the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace vtc
