#include "cptd/error.hpp"

namespace cptd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::RaggedSeries: return "RaggedSeries";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::UnknownSeries: return "UnknownSeries";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SizesExceedPanel: return "SizesExceedPanel";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::TooFewSeries: return "TooFewSeries";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NoHistory: return "NoHistory";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::UnboundedWidth: return "UnboundedWidth";
    case ErrorCode::ZeroWidth: return "ZeroWidth";
  }
  return "UnknownError";
}

ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec:
    case ErrorCode::ConfigError:
    case ErrorCode::WindowOutOfRange:
      return ErrorClass::Config;
    case ErrorCode::IoError:
      return ErrorClass::Io;
    case ErrorCode::MissingColumn:
    case ErrorCode::BadHeader:
    case ErrorCode::RaggedSeries:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::DuplicateCell:
    case ErrorCode::MissingPrediction:
    case ErrorCode::UnknownSeries:
    case ErrorCode::SizesExceedPanel:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::EmptyTestSet:
    case ErrorCode::TooFewSeries:
      return ErrorClass::Data;
    case ErrorCode::SingularDesign:
    case ErrorCode::NoHistory:
    case ErrorCode::EmptyScores:
    case ErrorCode::UnboundedWidth:
    case ErrorCode::ZeroWidth:
      return ErrorClass::Math;
  }
  return ErrorClass::Config;
}

const char* to_string(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Config: return "ConfigError";
    case ErrorClass::Io: return "IoError";
    case ErrorClass::Data: return "DataError";
    case ErrorClass::Math: return "MathError";
  }
  return "ConfigError";
}

}  // namespace cptd
