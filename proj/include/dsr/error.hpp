#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsr {

enum class ErrorCode {
  InvalidArgument,
  GridMismatch,
  ChannelMismatch,
  KTooLarge,
  NonFiniteFlow,
  TooManyObjects,
  PlacementFailure,
  ActionOutOfGrid,
  EmptyRegion,
  NoObjects,
  SchemaVersion,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dsr
