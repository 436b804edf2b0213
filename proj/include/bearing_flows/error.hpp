#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bearing_flows {

enum class ErrorCode {
  kInvalidGraph,
  kNotADag,
  kZeroVector,
  kMissingTarget,
  kGraphMismatch,
  kDegenerateFormation,
  kTargetMissingEdge,
  kInvalidTarget,
  kNumericalFailure,
  kDisconnectedGraph,
  kNonPositiveNu,
  kNotStronglyConnected,
  kNoHamiltonianCycle,
  kTooLarge,
  kCollinearDegenerate,
  kInfeasible,
  kParse,
  kValidation,
  kUnknownName,
  kInvalidArgument,
};

std::string_view ToString(ErrorCode code);

// All library failures are reported through this type; the code identifies
// the failure class and what() carries a human readable explanation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bearing_flows
