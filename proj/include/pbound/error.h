#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pbound {

/// Failure categories raised by the library. Each maps onto one named
/// failure of an operation; the CLI turns them into exit codes.
enum class ErrorCode {
  // Input validation.
  kInvalidArgument,
  kInvalidShape,
  kParse,
  kNonGeneratorRows,
  kNegativeRate,
  kReducible,
  kNoArrivals,
  kUnstable,
  // Numerical kernels.
  kSingularSystem,
  kPositiveDiagonal,
  kNotConverged,
  kNotNonnegative,
  kOutsideDomain,
  kGridTooCoarse,
  // Drift certificates.
  kInfeasibleTheta,
  kOutsideMgfDomain,
  kNoFeasibleTheta,
  kInfeasibleParameters,
  kEnvelopeViolated,
  kTailTooHeavy,
  // Bounds and witnesses.
  kMismatchedModel,
  kSmallSetNotAtom,
  kZeroServiceMass,
  kDegenerateXi,
  kConditionViolated,
  kAllDegenerate,
  // Distance bound.
  kDivergentInnerIntegral,
  kToleranceUnreachable,
  // Simulation.
  kExplodedCycle,
};

std::string_view to_string(ErrorCode code);

/// True for codes that describe malformed or unacceptable input rather than
/// a model that is well-formed but admits no certificate.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pbound
