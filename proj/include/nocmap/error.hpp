#pragma once

#include <stdexcept>
#include <string>

namespace nocmap {

// Every failure surfaced by the library derives from Error; the kind maps
// one-to-one onto the status codes of the C API.
enum class ErrorKind {
  config,
  usage,
  protocol,
  validation,
  framing,
  resource,
  io,
  runtime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(K, what) {}
};

using ConfigError = TypedError<ErrorKind::config>;
using UsageError = TypedError<ErrorKind::usage>;
using ProtocolError = TypedError<ErrorKind::protocol>;
using ValidationError = TypedError<ErrorKind::validation>;
using FramingError = TypedError<ErrorKind::framing>;
using ResourceError = TypedError<ErrorKind::resource>;
using IoError = TypedError<ErrorKind::io>;
// Simulation could not make progress (deadlock, cycle budget exhausted).
using RuntimeError = TypedError<ErrorKind::runtime>;

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace nocmap
