#include "ocon/error.hpp"

namespace ocon {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedImage: return "TruncatedImage";
    case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorCode::FileError: return "FileError";
    case ErrorCode::ManifestSyntax: return "ManifestSyntax";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::NoCounterexamples: return "NoCounterexamples";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::StoreError: return "StoreError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::WeightsUnavailable: return "WeightsUnavailable";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace ocon
