#include "rwde/error.hpp"

namespace rwde {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::StatisticalPower: return "statistical-power error";
    case ErrorKind::Capability: return "capability error";
    case ErrorKind::Divergence: return "divergence error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

}  // namespace rwde
