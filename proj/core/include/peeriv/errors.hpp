#pragma once

#include <stdexcept>
#include <string>

namespace peeriv {

/// Error classes map 1:1 onto CLI exit codes (see README "Exit codes").
enum class ErrorClass : int {
  kConfig = 3,
  kSchema = 4,
  kValidation = 5,
  kData = 6,
  kNumerical = 7,
  kEmptySample = 8,
  kIo = 9,
  kUsage = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

// Bad configuration (simulator parameters, scheme/column mismatch, unknown keys).
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorClass::kConfig, w) {}
};
// Input file does not have the expected columns.
struct SchemaError : Error {
  explicit SchemaError(const std::string& w) : Error(ErrorClass::kSchema, w) {}
};
// Row- or match-level invariant violated.
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorClass::kValidation, w) {}
};
// Data is well-formed but semantically impossible (overlapping matches).
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorClass::kData, w) {}
};
// Rank deficiency, singular systems, domain errors of closed forms.
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorClass::kNumerical, w) {}
};
struct EmptySampleError : Error {
  explicit EmptySampleError(const std::string& w) : Error(ErrorClass::kEmptySample, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorClass::kIo, w) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorClass::kUsage, w) {}
};

}  // namespace peeriv
