#pragma once

#include <stdexcept>
#include <string>

namespace ppsel {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the failure kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PPSEL_DEFINE_ERROR(Name)                  \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(std::string(#Name ": ") + what) {} \
  }

PPSEL_DEFINE_ERROR(InvalidArgument);
PPSEL_DEFINE_ERROR(OutOfWindow);
PPSEL_DEFINE_ERROR(DegenerateCovariate);
PPSEL_DEFINE_ERROR(ParseError);
PPSEL_DEFINE_ERROR(DimensionError);
PPSEL_DEFINE_ERROR(DimensionMismatch);
PPSEL_DEFINE_ERROR(BoundViolation);
PPSEL_DEFINE_ERROR(EmptyPattern);
PPSEL_DEFINE_ERROR(SingularSensitivity);
PPSEL_DEFINE_ERROR(OptimFailure);
PPSEL_DEFINE_ERROR(QuadratureFailure);
PPSEL_DEFINE_ERROR(TooManyCovariates);
PPSEL_DEFINE_ERROR(ConfigError);

#undef PPSEL_DEFINE_ERROR

}  // namespace ppsel
