#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace laap {

// Error taxonomy shared across the library. `kind()` is the stable
// machine-readable tag surfaced in the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// Operand shapes do not satisfy an op's contract.
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

// API misuse: a precondition that is the caller's responsibility.
struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

// Invalid external input (configs, datasets, ids).
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

// A persisted artifact failed an integrity check.
struct CorruptionError : Error {
  explicit CorruptionError(const std::string& m) : Error("corruption", m) {}
};

// Filesystem-level failure.
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace laap
