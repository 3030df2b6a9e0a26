#pragma once

#include <stdexcept>
#include <string>

namespace cptd {

/// Every failure the library can raise, by contract name. The CLI groups
/// these into four diagnostic classes (config / io / data / math).
enum class ErrorCode {
  // file and data ingestion
  MissingColumn,
  BadHeader,
  RaggedSeries,
  NonFiniteValue,
  DuplicateCell,
  MissingPrediction,
  UnknownSeries,
  IoError,
  // sizing and configuration
  SizesExceedPanel,
  ShapeMismatch,
  InvalidSpec,
  ConfigError,
  WindowOutOfRange,
  EmptyTestSet,
  TooFewSeries,
  // numeric preconditions
  SingularDesign,
  NoHistory,
  EmptyScores,
  UnboundedWidth,
  ZeroWidth,
};

const char* to_string(ErrorCode code);

/// Diagnostic class used for CLI exit codes and one-line error reports.
enum class ErrorClass { Config, Io, Data, Math };

ErrorClass error_class(ErrorCode code);
const char* to_string(ErrorClass cls);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cptd
