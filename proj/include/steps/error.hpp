#pragma once

#include <stdexcept>
#include <string>

namespace steps {

enum class ErrorKind { user, internal };

class StepsError : public std::runtime_error {
 public:
  StepsError(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_user(const std::string& msg) {
  throw StepsError(ErrorKind::user, msg);
}

[[noreturn]] inline void fail_internal(const std::string& msg) {
  throw StepsError(ErrorKind::internal, msg);
}

}  // namespace steps
