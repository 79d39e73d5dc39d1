#ifndef LONET_ERROR_HPP
#define LONET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lonet {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  numeric,  // non-convergence, infeasibility, degeneracy, undefined quantities
  parse,
  io,
};

/// Base error for the whole library. `stage()` is set when an error is
/// re-thrown from a pipeline stage so callers can map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Error(ErrorCode code, const std::string& msg, std::string stage)
      : std::runtime_error(msg), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& msg)
      : Error(ErrorCode::invalid_argument, msg) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg)
      : Error(ErrorCode::dimension_mismatch, msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg)
      : Error(ErrorCode::numeric, msg) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(ErrorCode::parse, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorCode::io, msg) {}
};

}  // namespace lonet

#endif
