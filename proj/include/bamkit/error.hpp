#pragma once

#include <stdexcept>
#include <string>

namespace bamkit {

enum class ErrorCode {
  kInvalidArgument,  // bad parameters supplied by the caller
  kShapeMismatch,
  kInvalidData,      // malformed or inconsistent input data
  kIo,
  kNumeric,          // divergence, non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace bamkit
