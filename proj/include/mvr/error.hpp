#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvr {

enum class ErrorKind {
  kFormat,
  kDimension,
  kShape,
  kNumeric,
  kDomain,
  kIndex,
  kRate,
  kCapacity,
  kCoding,
  kTruncation,
  kContract,
  kConfig,
  kInfeasible,
  kCorruption,
  kVersion,
  kUsage,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace mvr
