#pragma once

#include <stdexcept>
#include <string>

namespace kgram {

// Malformed or inconsistent arguments: dimension mismatches, non-finite
// values, empty sample sets.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range tuning parameters (lambda, delta, bandwidth, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A trajectory left the finite range. `time()` is the simulated time of the
// first non-finite state and `path()` the path index (-1 for deterministic
// integrations).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time, long path = -1)
      : std::runtime_error(what), time_(time), path_(path) {}
  double time() const { return time_; }
  long path() const { return path_; }

 private:
  double time_;
  long path_;
};

// A matrix whose spectrum violates a precondition (e.g. non-Hurwitz drift).
class SpectrumError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inverting a (numerically) singular gramian.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failure inside a numerical kernel (eigen-solver, iterative solver).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation-domain problems: quadrature underflow, degenerate boxes.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Experiment configuration problems. `line()` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Missing, unreadable or corrupt files.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kgram
