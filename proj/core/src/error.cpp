#include "tsxfidel/error.hpp"

namespace tsxfidel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kIrregularTimestamps: return "IrregularTimestamps";
    case ErrorCode::kUnparseableCell: return "UnparseableCell";
    case ErrorCode::kConstantTarget: return "ConstantTarget";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kNotEnoughSeries: return "NotEnoughSeries";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kTooManyPlayers: return "TooManyPlayers";
    case ErrorCode::kKOutOfRange: return "KOutOfRange";
    case ErrorCode::kDegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::kCorruptModel: return "CorruptModel";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace tsxfidel
