#pragma once

#include <stdexcept>
#include <string>

namespace urnflow {

enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  runtime = 3,
  io = 4,
};

/// Exception carrying a coarse category; the C API maps it onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& msg,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) throw Error(code, msg);
}

}  // namespace urnflow
