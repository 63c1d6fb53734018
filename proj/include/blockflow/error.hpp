#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockflow {

enum class ErrorCode {
  FrameMismatch,
  InvalidRotation,
  InvalidArgument,
  BehindCamera,
  SphereIntersectsImagePlane,
  EmptyBox,
  ParseError,
  EmptyCloud,
  DegenerateCloud,
  DegenerateAxes,
  NoObservationsEver,
  NoVisibleAnchor,
  EmptyCandidates,
  PlacementFailure,
  FullyBlocked,
  Diverged,
  OutOfDomain,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, service) can map it to an exit status or HTTP code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace blockflow
