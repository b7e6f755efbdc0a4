#include "nocmap/error.hpp"

namespace nocmap {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::usage: return "usage";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::validation: return "validation";
    case ErrorKind::framing: return "framing";
    case ErrorKind::resource: return "resource";
    case ErrorKind::io: return "io";
    case ErrorKind::runtime: return "runtime";
  }
  return "unknown";
}

}  // namespace nocmap
