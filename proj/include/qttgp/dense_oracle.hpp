#pragma once

#include <cstdint>
#include <vector>

#include "qttgp/common.hpp"
#include "qttgp/gp_solver.hpp"
#include "qttgp/quantics.hpp"

namespace qttgp {

// ---------------------------------------------------------------------------
// Dense reference state
// ---------------------------------------------------------------------------

/// Full amplitude vector over every grid point, in row-major per-axis order
/// (axis 0 slowest, the last axis contiguous).  Unit l2 norm by convention,
/// like its train-compressed counterpart.
struct DenseState {
  Vector values;
  QuanticsGrid grid;

  /// Flat position of per-axis indices m.
  std::uint64_t flat_of(const std::vector<std::uint64_t>& m) const;
};

/// Evaluate the Gaussian spec at every grid point and normalize.
DenseState dense_gaussian(const QuanticsGrid& grid, const GaussianSpec& spec);

/// Exact dense expansion of a train, reordered from site order into the
/// per-axis layout above.  No normalization is applied.
DenseState dense_from_tt(const TensorTrain& tt, const QuanticsGrid& grid);

// ---------------------------------------------------------------------------
// Dense evolution
// ---------------------------------------------------------------------------

/// The same split-step scheme as the train solver — identical lattice
/// dispersion, identical folded low-pass window, identical splitting and
/// per-step renormalization — executed on the full amplitude vector with a
/// radix-2 Fourier transform.  Exists as a correctness oracle; refuses grids
/// beyond 26 total bits with an estimate of the memory it would have needed.
/// `step_norms`, when given, receives the pre-renormalization norm of every
/// step (the quantity whose drift the integration guard watches).
DenseState dense_evolve(const DenseState& psi0, const EvolutionConfig& cfg,
                        std::vector<double>* step_norms = nullptr);

// ---------------------------------------------------------------------------
// Memory accounting
// ---------------------------------------------------------------------------

/// Side-by-side memory accounting for a d-dimensional, R-bits-per-axis grid
/// at working rank chi.
///   dense_bytes:     the full amplitude vector plus two transform
///                    workspaces, 3 * 16 * 2^(dR).
///   qtt_bytes:       modeled working traffic of a rank-chi cross build /
///                    evolution step — two-site search blocks, pivot crosses,
///                    factor scratch and sample memos over a rank-chi growth
///                    schedule, about a hundred chi^3 complex words per site.
///   qtt_state_bytes: the stored train itself, 16 * sum_a chi_{a-1} * 2 *
///                    chi_a with the capped natural-growth bond profile.
struct MemoryReport {
  std::uint64_t dense_bytes = 0;
  std::uint64_t qtt_bytes = 0;
  std::uint64_t qtt_state_bytes = 0;
};

MemoryReport memory_report(int bits, int dim, int chi);

}  // namespace qttgp
