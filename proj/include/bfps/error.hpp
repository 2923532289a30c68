#pragma once

#include <stdexcept>
#include <string>

namespace bfps {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  invalid_argument = 1,
  infeasible = 2,
  io = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) {
  throw Error(ErrorKind::invalid_argument, what);
}

[[noreturn]] inline void fail_io(const std::string& what) {
  throw Error(ErrorKind::io, what);
}

[[noreturn]] inline void fail_infeasible(const std::string& what) {
  throw Error(ErrorKind::infeasible, what);
}

}  // namespace bfps
