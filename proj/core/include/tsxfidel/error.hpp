#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsxfidel {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kMissingColumn,
  kNonMonotonicTimestamps,
  kIrregularTimestamps,
  kUnparseableCell,
  kConstantTarget,
  kSeriesTooShort,
  kEmptySplit,
  kNotEnoughSeries,
  kEmptyTrainingSet,
  kDivergedLoss,
  kShapeMismatch,
  kSingularSystem,
  kTooManyPlayers,
  kKOutOfRange,
  kDegenerateDenominator,
  kCorruptModel,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsxfidel
