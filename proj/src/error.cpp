#include "synpa/error.hpp"

namespace synpa {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kParse: return "parse error";
    case Errc::kSchemaVersion: return "schema version mismatch";
    case Errc::kRosterInconsistency: return "roster inconsistency";
    case Errc::kOutOfOrderPoll: return "out-of-order poll";
    case Errc::kDegenerateSample: return "degenerate sample";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kNonFiniteCoefficients: return "non-finite coefficients";
    case Errc::kAlignment: return "alignment error";
    case Errc::kRankDeficient: return "rank-deficient design";
    case Errc::kEmptyHoldout: return "empty holdout";
    case Errc::kNonCompleteGraph: return "non-complete graph";
    case Errc::kMissingPrediction: return "missing pair prediction";
    case Errc::kUnsupportedPlatform: return "unsupported platform";
    case Errc::kInsufficientClass: return "insufficient applications in class";
    case Errc::kIncompleteLog: return "incomplete log";
    case Errc::kInvalidConfig: return "invalid configuration";
    case Errc::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace synpa
