#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qttgp/common.hpp"
#include "qttgp/cross_interpolation.hpp"
#include "qttgp/quantics.hpp"
#include "qttgp/tensor_train.hpp"

namespace qttgp {

// ---------------------------------------------------------------------------
// Fourier operator
// ---------------------------------------------------------------------------

/// Orthonormal discrete Fourier operator on a quantics grid,
///     (F psi)(k) = 2^{-R/2} sum_m exp(-2 pi i k m / 2^R) psi(m)
/// per transformed axis.  `axis` selects one axis (-1 = all).  The operator
/// consumes coordinate-ordered bits and emits frequency indices with reversed
/// per-axis bit significance, i.e. it maps a state on `grid` to a state read
/// through `grid.momentum_view()`.  Sites of axes left out act as the
/// identity.  `inverse` returns the adjoint (frequency order in, coordinate
/// order out).
TensorTrainOperator build_qft_mpo(
    const QuanticsGrid& grid, bool inverse = false, int axis = -1,
    const TruncationPolicy& policy = TruncationPolicy::by_tol(1e-12));

/// One-dimensional convenience overload on `bits` sites.
TensorTrainOperator build_qft_mpo(int bits, bool inverse = false);

// ---------------------------------------------------------------------------
// Diagonal factors (sampled through cross interpolation)
// ---------------------------------------------------------------------------

/// A grid-diagonal factor sampled into a tensor train, plus the facts a
/// caller needs to judge it: whether the interpolation certified itself,
/// the largest bond, and the largest |phase argument| seen while sampling
/// (for phase factors; otherwise the largest |value|).
struct DiagonalBuild {
  TensorTrain tt;
  double max_abs_value = 0.0;
  bool converged = false;
  int max_bond = 0;
};

/// Cross-interpolate f over per-axis grid indices: tt(bits) = f(index(bits)).
/// `seeds` are packed site-bit indices used as starting pivots (the origin
/// and a few random points are always included).
DiagonalBuild build_index_diagonal_tt(
    const QuanticsGrid& grid,
    const std::function<cplx(const std::vector<std::uint64_t>&)>& f,
    const TciParams& params = {}, const std::vector<std::uint64_t>& seeds = {});

/// Cross-interpolate f over grid coordinates: tt(bits) = f(coord(bits)).
DiagonalBuild build_diagonal_tt(
    const QuanticsGrid& grid,
    const std::function<cplx(const std::vector<double>&)>& f,
    const TciParams& params = {}, const std::vector<std::uint64_t>& seeds = {});

// ---------------------------------------------------------------------------
// Kinetic propagator
// ---------------------------------------------------------------------------

/// Kinetic-step parameters.  The dispersion is the exact diagonalization of
/// the second-order finite-difference Laplacian,
///     T(k) = (1 / (2 mass)) (2/h)^2 sum_i sin^2(pi k_i / 2^R),
/// evaluated on raw frequency indices (the sine is symmetric across the
/// Nyquist fold).  A smooth low-pass window
///     theta(k) = prod_i 1 / (1 + exp(beta (min(k_i, 2^R - k_i) - k_cut)))
/// suppresses frequencies above k_cut so the phase stays tame where the
/// window is open.  The sign of h_t carries the direction of time.
struct KineticSpec {
  double mass = 1.0;
  double h_t = 0.01;
  double k_cut = 256.0;  ///< cutoff frequency index
  double beta = 2.0;
  double tol = 1e-10;    ///< build tolerance (sampling and assembly)
  bool low_pass = true;
};

/// Dispersion T(k) at integer frequency indices, one per axis
/// (restricted to `axis` when axis >= 0).
double kinetic_energy(const QuanticsGrid& grid, const KineticSpec& spec,
                      const std::vector<std::uint64_t>& k, int axis = -1);

/// Low-pass window value at integer frequency indices (1 when disabled).
double lowpass_window(const QuanticsGrid& grid, const KineticSpec& spec,
                      const std::vector<std::uint64_t>& k, int axis = -1);

/// Frequency-space phase exp(-i h_t T(k)) as a tensor train over the
/// momentum view of `grid` (reversed per-axis bit significance).  Unimodular
/// by construction; ranks stay small only while |h_t T| stays modest, which
/// is exactly what the low-pass window guarantees inside build_kinetic_mpo.
/// Throws BuildError when the sampling fails to certify.
TensorTrain build_kinetic_phase(const QuanticsGrid& grid,
                                const KineticSpec& spec, int axis = -1);

/// Softened-step window theta(k) over the momentum view, evaluated on the
/// folded index min(k, 2^R - k) so both frequency signs are treated alike.
TensorTrain build_lowpass(const QuanticsGrid& grid, const KineticSpec& spec,
                          int axis = -1);

/// Product theta(k) exp(-i h_t T(k)) sampled jointly.  This is the windowed
/// diagonal that build_kinetic_mpo conjugates; sampling the product directly
/// keeps the ranks low even where the bare phase would be hopelessly
/// oscillatory, because the window pins those regions to zero.
DiagonalBuild build_filtered_kinetic_phase(const QuanticsGrid& grid,
                                           const KineticSpec& spec,
                                           int axis = -1);

/// Full kinetic propagator in coordinate space,
///     U = F^dagger diag(theta exp(-i h_t T)) F,
/// assembled at the spec's tolerance and reused across all time steps.
/// Throws BuildError if the assembled operator needs a bond larger than
/// `max_bond_cap` (advising a larger tolerance or smaller k_cut), or if the
/// frequency diagonal fails to certify.
TensorTrainOperator build_kinetic_mpo(const QuanticsGrid& grid,
                                      const KineticSpec& spec, int axis = -1,
                                      int max_bond_cap = 64);

/// Smallest cutoff (starting from spec.k_cut, doubling, capped at half the
/// grid) whose filtered propagator preserves the norm of `trial` to within
/// `norm_tol`.  Throws CalibrationError when even the half-grid cutoff loses
/// too much (an under-resolved or pathological trial state).
double calibrate_kcut(const QuanticsGrid& grid, KineticSpec spec,
                      const TensorTrain& trial, double norm_tol = 1e-3);

// ---------------------------------------------------------------------------
// Potentials and coordinate diagonals
// ---------------------------------------------------------------------------

/// One additive term of the external potential.  Conventions:
///     harmonic_x: amplitude * (x / W)^2
///     harmonic_y: amplitude * (y / W)^2
///     cross_xy:   amplitude * x y / W^2
///     sine_mod:   amplitude * sin^2(q . r)
/// with W the grid half-width.  Each term gets its own evolution factor;
/// the factors commute, so splitting them costs no extra error.
enum class PotentialKind { harmonic_x, harmonic_y, cross_xy, sine_mod };

struct PotentialTerm {
  PotentialKind kind = PotentialKind::harmonic_x;
  double amplitude = 0.0;
  std::vector<double> wave_vector;  ///< q, sine_mod only
};

double eval_potential_term(const PotentialTerm& term, double half_width,
                           const std::vector<double>& x);

double eval_potential(const std::vector<PotentialTerm>& terms,
                      double half_width, const std::vector<double>& x);

/// Phase factor exp(-i h_t V_term(x)) on the coordinate grid.  max_abs_value
/// reports the largest |h_t V| encountered while sampling, so the caller can
/// warn when the phase risks wrapping (|V h_t| should stay below ~1).
DiagonalBuild build_potential_phase(const QuanticsGrid& grid,
                                    const PotentialTerm& term, double h_t,
                                    const TciParams& params = {});

/// Same factor promoted to a diagonal operator, built at tolerance `tol`
/// with bond cap `max_rank`.  Throws BuildError when the sampling fails to
/// certify; prints a warning to stderr when |V h_t| exceeds 1 anywhere
/// sampled (poor compression ahead — reduce the time step).
TensorTrainOperator build_potential_mpo(const QuanticsGrid& grid,
                                        const PotentialTerm& term, double h_t,
                                        double tol = 1e-10,
                                        int max_rank = TruncationPolicy::unlimited);

/// Exact tensor train of x_axis^power on the coordinate grid.
/// power 1 has bond dimension 2, power 2 bond dimension 3.
TensorTrain build_coordinate_tt(const QuanticsGrid& grid, int axis,
                                int power = 1);

}  // namespace qttgp
