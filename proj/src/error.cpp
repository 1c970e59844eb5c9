#include "ctproj/error.hpp"

namespace ctproj {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::InvalidSpec: return "E_INVALID_SPEC";
    case ErrorCode::DimMismatch: return "E_DIM_MISMATCH";
    case ErrorCode::EmptyMarkers: return "E_EMPTY_MARKERS";
    case ErrorCode::MissingMarkers: return "E_MISSING_MARKERS";
    case ErrorCode::DataIntegrity: return "E_DATA_INTEGRITY";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Io: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace ctproj
