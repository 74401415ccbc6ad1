#pragma once

#include <stdexcept>
#include <string>

namespace rwde {

enum class ErrorKind {
  Parameter,         // invalid model parameters (weights, kappa, ...)
  StatisticalPower,  // not enough samples for the requested statistic
  Capability,        // cost guard tripped (enumeration too large, ...)
  Divergence,        // path sum vanished, nothing reaches the border
  Precondition,      // input violates an operation's stated precondition
  Config,            // malformed experiment configuration
  Internal,          // contract violation inside the library
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define RWDE_REQUIRE(cond, kind, msg)            \
  do {                                           \
    if (!(cond)) throw ::rwde::Error((kind), (msg)); \
  } while (0)

}  // namespace rwde
