#pragma once

#include <stdexcept>
#include <string>

namespace uniedge {

// Base for every error raised by the library. Subclasses name the failure
// kind so callers (and the CLI) can branch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UNIEDGE_DEFINE_ERROR(Name)         \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

UNIEDGE_DEFINE_ERROR(ShapeMismatch);
UNIEDGE_DEFINE_ERROR(NonFinite);
UNIEDGE_DEFINE_ERROR(DisconnectedOutput);
UNIEDGE_DEFINE_ERROR(MalformedLine);
UNIEDGE_DEFINE_ERROR(DuplicateObservation);
UNIEDGE_DEFINE_ERROR(EmptyFile);
UNIEDGE_DEFINE_ERROR(PatchTooLong);
UNIEDGE_DEFINE_ERROR(Disconnected);
UNIEDGE_DEFINE_ERROR(NonFiniteGradient);
UNIEDGE_DEFINE_ERROR(BadConfig);
UNIEDGE_DEFINE_ERROR(MissingCheckpoint);
UNIEDGE_DEFINE_ERROR(BadCheckpoint);

#undef UNIEDGE_DEFINE_ERROR

}  // namespace uniedge
