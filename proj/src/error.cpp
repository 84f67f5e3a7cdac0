#include "somb/error.hpp"

namespace somb {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Setup: return "setup";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Monitor: return "monitor";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Undersampled: return "undersampled";
    case ErrorKind::Geodesic: return "geodesic";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Format: return "format";
    case ErrorKind::Length: return "length";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace somb
