#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adcmd {

enum class ErrorCode {
  invalid_config,
  step_after_terminal,
  invalid_policy,
  invariant_violation,
  empty_window,
  budget_impossible,
  backend_unavailable,
  malformed_response,
  timeout,
  unknown_proposal,
  stale_proposal,
  session_ended,
  unknown_session,
  validation,
  precondition,
  io,
};

inline std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error; `code()` is the stable
// machine-readable part, `what()` the human one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::step_after_terminal: return "step-after-terminal";
    case ErrorCode::invalid_policy: return "invalid-policy";
    case ErrorCode::invariant_violation: return "invariant-violation";
    case ErrorCode::empty_window: return "empty-window";
    case ErrorCode::budget_impossible: return "budget-impossible";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::malformed_response: return "malformed-response";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::unknown_proposal: return "unknown-proposal";
    case ErrorCode::stale_proposal: return "stale-proposal";
    case ErrorCode::session_ended: return "session-ended";
    case ErrorCode::unknown_session: return "unknown-session";
    case ErrorCode::validation: return "validation";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace adcmd
