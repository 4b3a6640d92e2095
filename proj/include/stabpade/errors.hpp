#pragma once

#include <stdexcept>
#include <string>

namespace stabpade {

// Invalid user input: bad spec fields, malformed files, out-of-range parameters.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Parse failure in an imported file; line is 1-based (0 when unknown).
class ParseError : public ValidationError {
 public:
  ParseError(int line, std::string field, const std::string& what)
      : ValidationError(std::move(field), "line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Numerical failure: overflow, solver non-convergence, ill-conditioning, degenerate data.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllConditionedOverlapError : public NumericError {
 public:
  explicit IllConditionedOverlapError(double condition)
      : NumericError("overlap matrix condition estimate " + std::to_string(condition) +
                     " >= 1e12; prune near-linearly-dependent basis functions"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class TrackingError : public NumericError {
 public:
  TrackingError(double at, double quality, const std::string& what)
      : NumericError(what), at_(at), quality_(quality) {}
  // Parameter value (alpha or theta) at which the overlap collapsed.
  double at() const noexcept { return at_; }
  double quality() const noexcept { return quality_; }

 private:
  double at_;
  double quality_;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, std::string trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const std::string& trace() const noexcept { return trace_; }

 private:
  std::string trace_;
};

}  // namespace stabpade
