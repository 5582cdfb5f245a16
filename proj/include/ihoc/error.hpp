#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ihoc {

enum class ErrorKind {
  InvalidArgument,
  NonFinite,
  StepUnderflow,
  OutOfRange,
  SingularA,
  GridMismatch,
  DimensionMismatch,
  NoConvergence,
  PointNotInSet,
  ControlOutOfSet,
  EmptyLevel,
  EmptyGrid,
  SyntaxError,
  UnknownIdentifier,
  DomainError,
  NoBracket,
  NegativeStationaryControl,
  NotASaddle,
  NoCrossing,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind. Parser errors also carry the
/// byte offset of the offending token.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> offset = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> offset_;
};

}  // namespace ihoc
