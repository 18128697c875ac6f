#pragma once

#include <stdexcept>
#include <string>

namespace cpsi {

// Error taxonomy shared across the library. The CLI maps these onto
// process exit codes, so keep the hierarchy flat and explicit.

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weight/config files that fail validation; message names the offending field.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fewer local maxima than requested CPs.
struct DetectionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact tie in anomaly-score comparisons; the affected inference step is aborted
// rather than fabricating a sign.
struct DegenerateTie : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A witness point violates a constraint it should satisfy; signals an upstream bug.
struct InconsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parametric-programming iteration cap reached; carries the p-value bracket
// established so far.
struct PpCapExceeded : std::runtime_error {
  PpCapExceeded(const std::string& msg, double lower, double upper, long iterations)
      : std::runtime_error(msg), p_lower(lower), p_upper(upper), iterations(iterations) {}
  double p_lower;
  double p_upper;
  long iterations;
};

}  // namespace cpsi
