#include "ecg/error.hpp"

namespace ecg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::ConstantSignal: return "ConstantSignal";
    case ErrorCode::Upsample: return "Upsample";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MissingRateHeader: return "MissingRateHeader";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumFailure: return "ChecksumFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ecg
