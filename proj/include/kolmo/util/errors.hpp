#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

// Root of every error raised by the library. The CLI maps subclasses to exit
// codes, so new categories should derive from one of the classes below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArchitecture : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

// A scheme needs something the problem does not provide (e.g. the spatial
// Jacobian of the diffusion for Milstein).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

// A simulated state left the finite range. Carries the offending path and step.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, int path, int step)
      : Error(what), path_(path), step_(step) {}
  int path() const { return path_; }
  int step() const { return step_; }

 private:
  int path_;
  int step_;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

class RegistryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Loss or parameters became non-finite during training. step is -1 when the
// failure happened outside a training loop.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Not enough usable points for a log-log fit.
class FitRefused : public Error {
 public:
  using Error::Error;
};

}  // namespace kolmo
