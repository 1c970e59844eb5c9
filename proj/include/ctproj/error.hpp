#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctproj {

enum class ErrorCode {
  InvalidArgument,
  InvalidSpec,
  DimMismatch,
  EmptyMarkers,
  MissingMarkers,
  DataIntegrity,
  Parse,
  Io,
};

/// Machine-parsable prefix used on the CLI error stream, e.g. "E_INVALID_ARGUMENT".
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ctproj
