#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lps {

enum class ErrorCode {
  InvalidArgument,
  Unsupported,
  ResourceLimit,
  KernelCollision,
  Divergence,
  DegenerateInput,
  NumericFailure,
  HypothesisViolation,
  Validation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so
/// that report writers can turn it into a structured entry instead of a crash.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::ResourceLimit: return "resource-limit";
    case ErrorCode::KernelCollision: return "kernel-collision";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::NumericFailure: return "numeric-failure";
    case ErrorCode::HypothesisViolation: return "hypothesis-violation";
    case ErrorCode::Validation: return "validation";
  }
  return "unknown";
}

}  // namespace lps
