#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace factalign {

enum class ErrorKind {
  InvalidArgument,
  EmptyText,
  DimensionMismatch,
  ProviderUnavailable,
  NonFiniteEntry,
  InvalidCounts,
  EmptyGoldSet,
  TooFewAnnotations,
  DocumentMismatch,
  IntegrityViolation,
  StorageFailure,
  NotFound,
  UnknownRound,
};

std::string_view to_string(ErrorKind kind);

// All library failures are thrown as Error; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace factalign
