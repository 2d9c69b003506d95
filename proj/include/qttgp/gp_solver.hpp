#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qttgp/common.hpp"
#include "qttgp/evolution_ops.hpp"
#include "qttgp/quantics.hpp"
#include "qttgp/tensor_train.hpp"

namespace qttgp {

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

/// Gaussian wave packet, optionally boosted by a plane wave:
///     psi(x) ~ exp(-sum_i (x_i - c_i)^2 / (2 w_i^2)) exp(i sum_i b_i x_i).
/// Missing entries default to center 0, width 1, boost 0 per axis.
struct GaussianSpec {
  std::vector<double> center;
  std::vector<double> width;
  std::vector<double> boost;
};

/// Sample the packet into a normalized tensor train.  Seeded at the center
/// and one width out along each axis so the interpolation never starts in
/// the exponentially small tails.  Throws BuildError when the sampling
/// fails to certify.
TensorTrain build_gaussian(const QuanticsGrid& grid, const GaussianSpec& spec,
                           double tol = 1e-12);

// ---------------------------------------------------------------------------
// Evolution configuration and telemetry
// ---------------------------------------------------------------------------

/// One evolution run.  The kinetic spec contributes mass, cutoff, window
/// steepness, and the low-pass flag; its time step and tolerance are always
/// taken from h_t and tol_build here, so there is a single source of truth,
/// and its cutoff is clamped to the folded band edge of the grid.
struct EvolutionConfig {
  QuanticsGrid grid;
  double h_t = 0.01;    ///< signed time step
  double T = 1.0;       ///< total time; T / |h_t| must be a whole number
  double g = 0.0;       ///< non-linearity strength
  int chi_max = 64;     ///< bond cap for state-sized applications
  double tol_nl = 1e-10;     ///< non-linear sampling tolerance
  double tol_build = 1e-10;  ///< operator build tolerance
  KineticSpec kinetic;
  std::vector<PotentialTerm> potential;
  int record_every = 1;  ///< observable stride, in steps
};

/// Per-step observables.  Scalars for absent axes stay 0.
struct ObservableRecord {
  double t = 0.0;
  double norm_before_renorm = 0.0;
  int max_bond = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double width_x = 0.0;
  double width_y = 0.0;
  int nl_max_bond = 0;  ///< largest bond of the non-linear factor this step
};

/// The evolving state: a normalized train and its clock.
struct GPState {
  TensorTrain psi;
  double t = 0.0;
};

// ---------------------------------------------------------------------------
// Pre-built step operators
// ---------------------------------------------------------------------------

/// Everything reusable across steps: the kinetic propagator (one factor per
/// axis; they commute and their product is the full-dimensional operator)
/// and the potential phases at full and half step.
struct TrotterOps {
  QuanticsGrid grid;
  double h_t = 0.0;  ///< signed step these operators realize
  std::vector<TensorTrainOperator> kinetic;
  std::vector<TensorTrainOperator> potential_full;
  std::vector<TensorTrainOperator> potential_half;
  double max_pot_phase = 0.0;  ///< largest |V h_t| seen while sampling
};

/// Build all step operators for cfg.  Throws BuildError on certification or
/// bond-cap failure.
TrotterOps build_ops(const EvolutionConfig& cfg);

/// The exact inverse step: every factor adjointed, the step negated.
/// Backward evolution reuses these rather than rebuilding, so the linear
/// parts of a forward/backward pair cancel bit-exactly.
TrotterOps conjugate_ops(const TrotterOps& ops);

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// The non-linear factor applied in one sampling pass: returns the train of
///     idx -> exp(-i g |psi(idx)|^2 h_t) psi(idx)
/// without ever materializing an operator.  State evaluations run through a
/// prefix-cached contractor, so the sampling cost stays near-linear in the
/// number of distinct prefixes.  `peak_seed` (optional, in/out) supplies the
/// previous step's maximum-density pivot as a seed and receives the new one;
/// without it the seed is found by sampled hill climbing on |psi|.
TensorTrain nonlinear_step(const GPState& state, double g, double h_t,
                           double tol_nl, int max_rank,
                           std::uint64_t* peak_seed = nullptr);

/// Which edges of the product formula this step touches.  Interior steps
/// merge the two adjacent potential half-steps into one full application.
struct StepEdge {
  bool first = false;
  bool last = false;
};

/// One second-order step: potential+non-linear for the edge-appropriate
/// fraction of h_t, the kinetic factor(s) for the full step, then
/// potential+non-linear again when closing an edge.  Renormalizes and
/// reports the pre-renormalization norm and the non-linear bond through
/// `record`.  Throws IntegrationError when the norm drifts by more than 0.1
/// in one step (misconfigured cutoff or step size).
GPState trotter_step(const GPState& state, const TrotterOps& ops,
                     const EvolutionConfig& cfg, StepEdge edge,
                     ObservableRecord* record = nullptr,
                     std::uint64_t* peak_seed = nullptr);

/// Run the full product formula for T/|h_t| steps.  Emits a record every
/// `record_every` steps (and always for the final step).  Throws
/// std::invalid_argument when T is not a whole number of steps, plus
/// anything trotter_step throws.
std::pair<GPState, std::vector<ObservableRecord>> evolve(
    const TensorTrain& psi0, const EvolutionConfig& cfg);

/// Forward to T, then backward to 0 with the conjugated operators;
/// returns epsilon = 1 - |<psi_back | psi_0>|^2.
double forward_backward_error(const TensorTrain& psi0,
                              const EvolutionConfig& cfg);

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

struct Moments {
  double mean = 0.0;
  double width = 0.0;  ///< sqrt(<x^2> - <x>^2)
};

/// First two moments of |psi|^2 along one axis, via the exact coordinate
/// trains.  Throws IntegrationError when the variance is negative beyond
/// rounding (-1e-10).
Moments measure_moments(const TensorTrain& psi, const QuanticsGrid& grid,
                        int axis);

struct DensitySample {
  std::vector<double> x;  ///< grid coordinates of the sampled point
  double density = 0.0;   ///< |psi|^2 at that grid point (discrete l2 weight)
};

/// |psi|^2 at the grid points nearest `n_per_axis` uniformly spaced
/// coordinates spanning [lo, hi] per axis (cartesian product across axes).
/// Pure point evaluation on the discrete l2-normalized state; multiply by
/// 1/h_r^dim for a continuum density.  Throws std::invalid_argument when
/// the window leaves the domain or is empty.
std::vector<DensitySample> sample_density(const TensorTrain& psi,
                                          const QuanticsGrid& grid,
                                          const std::vector<double>& lo,
                                          const std::vector<double>& hi,
                                          int n_per_axis);

}  // namespace qttgp
