#pragma once

#include <stdexcept>
#include <string>

namespace densefield {

/// Base for every error raised by the library. `kind()` names the failure
/// class so callers (and the CLI) can map it to a diagnostic without RTTI.
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what)
      : std::runtime_error(std::string(kind) + ": " + what), kind_(kind) {}
  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

#define DENSEFIELD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

DENSEFIELD_DEFINE_ERROR(ParseError)
DENSEFIELD_DEFINE_ERROR(TopologyError)
DENSEFIELD_DEFINE_ERROR(DegenerateGeometry)
DENSEFIELD_DEFINE_ERROR(InvalidCount)
DENSEFIELD_DEFINE_ERROR(SourceOffSurface)
DENSEFIELD_DEFINE_ERROR(FrameMismatch)
DENSEFIELD_DEFINE_ERROR(EmptyField)
DENSEFIELD_DEFINE_ERROR(ShapeMismatch)
DENSEFIELD_DEFINE_ERROR(EmptyPrediction)
DENSEFIELD_DEFINE_ERROR(EmptyInput)
DENSEFIELD_DEFINE_ERROR(InvalidSpec)
DENSEFIELD_DEFINE_ERROR(InvalidArgument)
DENSEFIELD_DEFINE_ERROR(IOError)

#undef DENSEFIELD_DEFINE_ERROR

}  // namespace densefield
