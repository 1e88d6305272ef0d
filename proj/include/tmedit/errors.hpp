#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tmedit {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input data. `line()` is 1-based, 0 if unknown.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Bad arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// An internal invariant was violated; always a bug.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// An exhaustive routine refused an instance larger than its budget.
class BudgetError : public DataError {
 public:
  using DataError::DataError;
};

// A placeholder gap needed more than K_max insertions.
class GapOverflowError : public DataError {
 public:
  GapOverflowError(std::size_t seq, std::size_t gap, std::size_t needed,
                   std::size_t k_max)
      : DataError("sequence " + std::to_string(seq) + " gap " +
                  std::to_string(gap) + " needs " + std::to_string(needed) +
                  " placeholders, more than K_max=" + std::to_string(k_max)),
        seq_(seq),
        gap_(gap),
        needed_(needed) {}
  std::size_t seq() const { return seq_; }
  std::size_t gap() const { return gap_; }
  std::size_t needed() const { return needed_; }

 private:
  std::size_t seq_, gap_, needed_;
};

// Failure inside one stage of an edit pipeline; the stage name is kept.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace tmedit
