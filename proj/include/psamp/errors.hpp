#pragma once

#include <stdexcept>
#include <string>

namespace psamp {

// Base for every library error. `code()` is a stable machine-readable tag
// (also used by the CLI when rendering JSON error objects).
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

#define PSAMP_DEFINE_ERROR(Name)                         \
  class Name : public Error {                            \
  public:                                                \
    explicit Name(const std::string& message)            \
        : Error(#Name, message) {}                       \
  }

PSAMP_DEFINE_ERROR(NonStochasticRow);
PSAMP_DEFINE_ERROR(NotStationary);
PSAMP_DEFINE_ERROR(NoUniqueStationary);
PSAMP_DEFINE_ERROR(ZeroMassState);
PSAMP_DEFINE_ERROR(DriverMismatch);
PSAMP_DEFINE_ERROR(ImpossibleTransition);
PSAMP_DEFINE_ERROR(EnumerationTooLarge);
PSAMP_DEFINE_ERROR(BadWeights);
PSAMP_DEFINE_ERROR(KernelMismatch);
PSAMP_DEFINE_ERROR(NoOrder);
PSAMP_DEFINE_ERROR(NotMonotone);
PSAMP_DEFINE_ERROR(NoBounds);
PSAMP_DEFINE_ERROR(WindowLimitExceeded);
PSAMP_DEFINE_ERROR(IrrationalEntries);
PSAMP_DEFINE_ERROR(TooFewSamples);

#undef PSAMP_DEFINE_ERROR

}  // namespace psamp
