#include "dsr/error.hpp"

namespace dsr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NonFiniteFlow: return "NonFiniteFlow";
    case ErrorCode::TooManyObjects: return "TooManyObjects";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::ActionOutOfGrid: return "ActionOutOfGrid";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NoObjects: return "NoObjects";
    case ErrorCode::SchemaVersion: return "SchemaVersion";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace dsr
