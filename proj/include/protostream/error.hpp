#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protostream {

enum class ErrorKind {
  EmptyInput,
  DimMismatch,
  ZeroVector,
  InvalidArgument,
  TooFewClasses,
  EmptyCandidates,
  NoNovelPrototypes,
  BadMagic,
  BadVersion,
  TruncatedFile,
  UnlabeledSupport,
  LengthMismatch,
  SpecInfeasible,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace protostream
