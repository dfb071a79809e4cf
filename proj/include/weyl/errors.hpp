#pragma once

#include <stdexcept>
#include <string>

namespace weyl {

// Base class for all failures raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct DegenerateEigenvalue : Error {
  using Error::Error;
};
struct EllipticityViolated : Error {
  using Error::Error;
};
struct StepUnderflow : Error {
  using Error::Error;
};
struct NotHermitian : Error {
  using Error::Error;
};
struct NotUnitary : Error {
  using Error::Error;
};
struct NotSpecialUnitary : Error {
  using Error::Error;
};
struct NotTraceFree : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct LinearlyDependentFrame : Error {
  using Error::Error;
};
struct InconsistentOrientation : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct TruncationTooSmall : Error {
  using Error::Error;
};
struct ConvergenceFailure : Error {
  using Error::Error;
};
struct UnsupportedFamily : Error {
  using Error::Error;
};
struct OutsideTrustWindow : Error {
  using Error::Error;
};
struct AssumptionViolated : Error {
  using Error::Error;
};
struct SchemaError : Error {
  // `pointer` is a JSON-pointer-style path to the offending field.
  SchemaError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer(pointer) {}
  std::string pointer;
};

}  // namespace weyl
