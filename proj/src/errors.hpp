#pragma once

#include <stdexcept>
#include <string>

namespace bdoe {

enum class ErrorCode {
  InvalidArgument,
  DegenerateModel,
  Singular,
  NoValidRounding,
  Nonconvergence,
  DeadEnd,
  NoInitialDesign,
  BudgetExceeded,
  Io,
  Parse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace bdoe
