#pragma once

#include <stdexcept>
#include <string>

namespace slipflow {

// Base for all failures raised by the library. `code()` is a stable
// machine-readable identifier; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

#define SLIPFLOW_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
  public:                                                             \
    explicit Name(const std::string& msg) : Error(#Name, msg) {}      \
  }

// geometry / mesh
SLIPFLOW_DEFINE_ERROR(InvalidProfile);
SLIPFLOW_DEFINE_ERROR(MeshError);
SLIPFLOW_DEFINE_ERROR(PeriodicMismatch);
SLIPFLOW_DEFINE_ERROR(TruncationTooLow);

// fem
SLIPFLOW_DEFINE_ERROR(BadBoundarySpec);
SLIPFLOW_DEFINE_ERROR(GaugeError);
SLIPFLOW_DEFINE_ERROR(NonPositiveSlip);
SLIPFLOW_DEFINE_ERROR(SingularSystem);
SLIPFLOW_DEFINE_ERROR(NewtonDivergence);
SLIPFLOW_DEFINE_ERROR(PointOutsideMesh);
SLIPFLOW_DEFINE_ERROR(SegmentOutsideMesh);
SLIPFLOW_DEFINE_ERROR(KernelNotNormalized);

// cell / micro / coupling
SLIPFLOW_DEFINE_ERROR(InsufficientSamples);
SLIPFLOW_DEFINE_ERROR(SingularConstraintSystem);
SLIPFLOW_DEFINE_ERROR(DegenerateShear);
SLIPFLOW_DEFINE_ERROR(EmptySamples);
SLIPFLOW_DEFINE_ERROR(NonMonotoneSites);
SLIPFLOW_DEFINE_ERROR(MaxIterationsExceeded);

// bench
SLIPFLOW_DEFINE_ERROR(GridMismatch);
SLIPFLOW_DEFINE_ERROR(NoReattachment);
SLIPFLOW_DEFINE_ERROR(ConfigError);

#undef SLIPFLOW_DEFINE_ERROR

} // namespace slipflow
