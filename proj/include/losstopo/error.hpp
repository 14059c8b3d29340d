#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace losstopo {

// Configuration or precondition violations (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, shape mismatches inside numerics, non-convergence
// (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures and malformed input files (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : IoError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Thrown by the trainer when the loss stops being finite.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::vector<double> last_finite, std::size_t step)
      : NumericError("training diverged at step " + std::to_string(step)),
        last_finite_(std::move(last_finite)),
        step_(step) {}

  const std::vector<double>& last_finite_theta() const noexcept { return last_finite_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::vector<double> last_finite_;
  std::size_t step_;
};

}  // namespace losstopo
