#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace limescope {

enum class ErrorKind {
  MalformedImage,
  UnsupportedFormat,
  ChannelMismatch,
  BadParameter,
  DimensionMismatch,
  ShapeError,
  TransportFailure,
  SpawnFailure,
  HandshakeTimeout,
  ProtocolViolation,
  EmptyClass,
  DivergedLoss,
  SingularSystem,
  EmptyManifest,
  BadTarget,
  LengthMismatch,
  IndexOutOfRange,
  EmptyMatrix,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every domain failure in the library is reported as an Error carrying a kind,
// so callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace limescope
