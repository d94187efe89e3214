#include "limescope/error.hpp"

namespace limescope {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedImage: return "MalformedImage";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::BadParameter: return "BadParameter";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::TransportFailure: return "TransportFailure";
    case ErrorKind::SpawnFailure: return "SpawnFailure";
    case ErrorKind::HandshakeTimeout: return "HandshakeTimeout";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::EmptyManifest: return "EmptyManifest";
    case ErrorKind::BadTarget: return "BadTarget";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace limescope
