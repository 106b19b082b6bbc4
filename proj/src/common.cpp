#include "mvr/error.hpp"
#include "mvr/tensor.hpp"

namespace mvr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kRate: return "rate";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kCoding: return "coding";
    case ErrorKind::kTruncation: return "truncation";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

std::string to_string(const Shape3& s) {
  return "(" + std::to_string(s.channels) + "," + std::to_string(s.height) + "," +
         std::to_string(s.width) + ")";
}

}  // namespace mvr
