#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calib {

// Precondition violations on user-supplied values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two prototypes closer than the projection threshold.
class DegeneratePrototypes : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, std::string diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Malformed input file; line numbers are 1-based and count the header.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed row that violates a domain invariant; rows are 0-based data rows.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::size_t row)
      : std::runtime_error("row " + std::to_string(row) + ": " + what),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace calib
