#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ocon {

enum class ErrorCode {
  InvalidConfig,
  UnsupportedFormat,
  TruncatedImage,
  UnsupportedDepth,
  FileError,
  ManifestSyntax,
  NotSymmetric,
  NoConvergence,
  DimensionMismatch,
  InsufficientData,
  Diverged,
  EmptyClass,
  NoCounterexamples,
  InsufficientClasses,
  StoreError,
  ChecksumMismatch,
  WeightsUnavailable,
  UnknownClass,
  ProtocolError,
  ParseError,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure in the library is reported through this type. `value()` carries
// the one integer some errors need: the manifest line, the divergence epoch or
// the class id.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::int64_t value = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::int64_t value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::int64_t value_;
};

}  // namespace ocon
