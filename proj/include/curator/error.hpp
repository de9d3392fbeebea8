#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace curator {

enum class ErrorCode {
  TypeMismatch,
  ParseError,
  ScriptParseError,
  StepLimitExceeded,
  ResourceLimitExceeded,
  TypeError,
  UnknownTool,
  ToolError,
  UnknownCustomModule,
  GenerationFailed,
  UnresolvedParam,
  UnknownTemplate,
  MissingParam,
  BackendUnavailable,
  MockExhausted,
  LlmOutputInvalid,
  CsvError,
  SchemaMismatch,
  LengthMismatch,
  UnknownQuery,
  BudgetExceeded,
  BadParams,
  ModuleError,
  ShapeMismatch,
  LearnerShapeError,
  InvalidArgument,
  IoError,
};

const char* error_code_name(ErrorCode code);

struct SourceLoc {
  int line = 0;  // 1-based
  int col = 0;   // 1-based
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Error(ErrorCode code, SourceLoc loc, std::string message)
      : std::runtime_error(std::move(message)), code_(code), loc_(loc) {}

  ErrorCode code() const { return code_; }
  const std::optional<SourceLoc>& loc() const { return loc_; }

 private:
  ErrorCode code_;
  std::optional<SourceLoc> loc_;
};

[[noreturn]] inline void raise(ErrorCode code, std::string message) {
  throw Error(code, std::move(message));
}

[[noreturn]] inline void raise_at(ErrorCode code, SourceLoc loc, std::string message) {
  throw Error(code, loc, std::move(message));
}

}  // namespace curator
