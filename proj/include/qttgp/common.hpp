#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace qttgp {

using cplx = std::complex<double>;

/// Thrown when an operator construction cannot meet its contract
/// (e.g. a bond-dimension cap is exceeded at the requested tolerance).
struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a time step leaves the trust region of the integrator
/// (norm drift beyond the per-step limit, non-finite values, ...).
struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& msg, double last_good_time = -1.0)
      : std::runtime_error(msg), last_good_time(last_good_time) {}
  double last_good_time;  ///< time of the last completed step, -1 if none
};

/// Thrown when the momentum-cutoff calibration cannot find an acceptable cutoff.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a sampled function looks identically zero at every seed.
struct NullFunctionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rank / tolerance budget for every truncating operation.
/// max_rank bounds bond dimensions; rel_tol is the per-bond relative
/// Frobenius truncation threshold.  rel_tol = 0 keeps everything that
/// fits inside max_rank.
struct TruncationPolicy {
  static constexpr int unlimited = std::numeric_limits<int>::max();

  int max_rank = unlimited;
  double rel_tol = 0.0;

  static TruncationPolicy by_rank(int r) { return {r, 0.0}; }
  static TruncationPolicy by_tol(double t) { return {unlimited, t}; }
  static TruncationPolicy of(int r, double t) { return {r, t}; }
};

}  // namespace qttgp
