#include "pbound/error.h"

namespace pbound {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidShape: return "InvalidShape";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kNonGeneratorRows: return "NonGeneratorRows";
    case ErrorCode::kNegativeRate: return "NegativeRate";
    case ErrorCode::kReducible: return "Reducible";
    case ErrorCode::kNoArrivals: return "NoArrivals";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kPositiveDiagonal: return "PositiveDiagonal";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kNotNonnegative: return "NotNonnegative";
    case ErrorCode::kOutsideDomain: return "OutsideDomain";
    case ErrorCode::kGridTooCoarse: return "GridTooCoarse";
    case ErrorCode::kInfeasibleTheta: return "InfeasibleTheta";
    case ErrorCode::kOutsideMgfDomain: return "OutsideMgfDomain";
    case ErrorCode::kNoFeasibleTheta: return "NoFeasibleTheta";
    case ErrorCode::kInfeasibleParameters: return "InfeasibleParameters";
    case ErrorCode::kEnvelopeViolated: return "EnvelopeViolated";
    case ErrorCode::kTailTooHeavy: return "TailTooHeavy";
    case ErrorCode::kMismatchedModel: return "MismatchedModel";
    case ErrorCode::kSmallSetNotAtom: return "SmallSetNotAtom";
    case ErrorCode::kZeroServiceMass: return "ZeroServiceMass";
    case ErrorCode::kDegenerateXi: return "DegenerateXi";
    case ErrorCode::kConditionViolated: return "ConditionViolated";
    case ErrorCode::kAllDegenerate: return "AllDegenerate";
    case ErrorCode::kDivergentInnerIntegral: return "DivergentInnerIntegral";
    case ErrorCode::kToleranceUnreachable: return "ToleranceUnreachable";
    case ErrorCode::kExplodedCycle: return "ExplodedCycle";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidShape:
    case ErrorCode::kParse:
    case ErrorCode::kNonGeneratorRows:
    case ErrorCode::kNegativeRate:
    case ErrorCode::kReducible:
    case ErrorCode::kNoArrivals:
    case ErrorCode::kOutsideDomain:
    case ErrorCode::kOutsideMgfDomain:
    case ErrorCode::kMismatchedModel:
      return true;
    default:
      return false;
  }
}

}  // namespace pbound
