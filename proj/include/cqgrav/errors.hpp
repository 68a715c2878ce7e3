#ifndef CQGRAV_ERRORS_HPP
#define CQGRAV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cqgrav {

enum class ErrorCode {
  DimensionMismatch,
  ShapeMismatch,
  GridMismatch,
  NotHermitian,
  NotCompletelyPositive,
  NotTracePreserving,
  StepTooLarge,
  SupportViolation,
  ResolutionTooCoarse,
  UnsupportedFamily,
  DivergentIntegral,
  MissingDecoherenceRate,
  InvalidCoupling,
  InvalidPair,
  OverflowGuard,
  SchemaError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace cqgrav

#endif
