#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synpa {

enum class Errc {
  kParse,
  kSchemaVersion,
  kRosterInconsistency,
  kOutOfOrderPoll,
  kDegenerateSample,
  kInvalidArgument,
  kNonFiniteCoefficients,
  kAlignment,
  kRankDeficient,
  kEmptyHoldout,
  kNonCompleteGraph,
  kMissingPrediction,
  kUnsupportedPlatform,
  kInsufficientClass,
  kIncompleteLog,
  kInvalidConfig,
  kIo,
};

std::string_view to_string(Errc code);

/// Domain error carrying a stable category code. Every failure the library
/// reports goes through this type; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace synpa
