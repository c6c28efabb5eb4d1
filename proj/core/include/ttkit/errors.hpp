#pragma once

#include <stdexcept>
#include <string>

namespace ttkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TTKIT_ERROR_TYPE(Name)                              \
  class Name : public Error {                               \
   public:                                                  \
    Name() : Error(#Name) {}                                \
    explicit Name(const std::string& what)                  \
        : Error(std::string(#Name) + ": " + what) {}        \
  }

TTKIT_ERROR_TYPE(NonFiniteState);
TTKIT_ERROR_TYPE(BadContact);
TTKIT_ERROR_TYPE(NonUnitQuaternion);
TTKIT_ERROR_TYPE(TooFewSamples);
TTKIT_ERROR_TYPE(TimestampMismatch);
TTKIT_ERROR_TYPE(DegenerateVelocity);
TTKIT_ERROR_TYPE(UnsortedInput);
TTKIT_ERROR_TYPE(DegenerateCorners);
TTKIT_ERROR_TYPE(DegenerateView);
TTKIT_ERROR_TYPE(NoPairedSamples);
TTKIT_ERROR_TYPE(NoConvergence);
TTKIT_ERROR_TYPE(PoolExhausted);
TTKIT_ERROR_TYPE(InconsistentInputs);
TTKIT_ERROR_TYPE(EmptyInput);
TTKIT_ERROR_TYPE(BadProblem);
TTKIT_ERROR_TYPE(ConfigError);
TTKIT_ERROR_TYPE(IoError);

#undef TTKIT_ERROR_TYPE

}  // namespace ttkit
