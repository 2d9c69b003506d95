#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <unordered_map>
#include <vector>

#include "qttgp/tensor_train.hpp"

namespace qttgp {

/// Black-box complex function of an n-bit multi-index, with memoisation and
/// telemetry.  bits[i] addresses site i; at most 62 sites.
class FunctionOracle {
 public:
  using Fn = std::function<cplx(const std::vector<int>&)>;

  FunctionOracle(int n_sites, Fn fn);

  cplx operator()(std::uint64_t packed) const;
  cplx at(const std::vector<int>& bits) const;

  int sites() const { return n_; }
  std::uint64_t eval_count() const { return evals_; }  ///< raw calls, cache misses only
  double max_abs() const { return max_abs_; }          ///< largest |f| sampled so far

 private:
  int n_;
  Fn fn_;
  mutable std::vector<int> scratch_;
  mutable std::unordered_map<std::uint64_t, cplx> cache_;
  mutable std::uint64_t evals_ = 0;
  mutable double max_abs_ = 0.0;
};

struct TciParams {
  double tol = 1e-10;        ///< target max-abs residual relative to max sampled |f|
  int max_rank = TruncationPolicy::unlimited;
  int max_sweeps = 60;
  int pivots_per_bond = 2;   ///< insertions attempted per bond visit
  int rook_iters = 3;
  int random_candidates = 4; ///< random columns probed per bond visit
  int certify_probes = 128;  ///< random entries checked before declaring success
  double certify_slack = 10.0;  ///< accepted ratio of probed error to tol
  double noise_slack = 6.0;  ///< accepted ratio of probed error to the
                             ///< measured roundoff floor of the pivot inverses
  std::uint64_t rng_seed = 0x5eed5eedull;
  std::uint64_t full_search_limit = 4096;  ///< search all of Pi below this size
  double cond_limit = 1e12;  ///< reject pivots that push cond(P) beyond this
};

/// Two-site accumulative cross interpolation with partial rook pivoting.
/// Pivot sets are nested by construction and only ever grow.
class CrossInterpolation {
 public:
  CrossInterpolation(FunctionOracle oracle, TciParams params,
                     std::vector<std::vector<int>> seeds);

  void run();

  const TensorTrain& tt() const;
  const FunctionOracle& oracle() const { return oracle_; }
  bool converged() const { return converged_; }
  int sweeps() const { return sweeps_; }
  /// Largest |f - tt| observed among entries probed in the last sweep.
  double error_estimate() const { return last_sweep_residual_; }
  std::vector<int> ranks() const;

  /// Full multi-indices (packed) of all pivot pairs, all bonds.
  std::vector<std::uint64_t> pivot_indices() const;
  /// Per-bond pivot row prefixes / column suffixes (packed), for diagnostics.
  const std::vector<std::vector<std::uint64_t>>& row_sets() const { return rows_; }
  const std::vector<std::vector<std::uint64_t>>& col_sets() const { return cols_; }
  /// Pivot with the largest sampled |f| (useful as a warm-start seed).
  std::uint64_t max_abs_pivot() const;

 private:
  friend double residual_probe(const CrossInterpolation&, int, std::uint64_t);

  int n_;
  FunctionOracle oracle_;
  TciParams params_;
  std::mt19937_64 rng_;
  // per bond a: row prefixes (sites 0..a, packed low bits) and column
  // suffixes (sites a+1.., packed at their natural positions)
  std::vector<std::vector<std::uint64_t>> rows_, cols_;
  bool converged_ = false;
  int sweeps_ = 0;
  double last_sweep_residual_ = 0.0;
  mutable TensorTrain tt_;
  mutable bool tt_dirty_ = true;

  bool visit_bond(int a, double tol_eff, double* max_resid);
  double cross_noise_probe();
  bool add_seed_pivot(std::uint64_t packed);
  bool add_global_pivot(std::uint64_t packed);
  bool ensure_global_col(int a, std::uint64_t* packed, bool allow_insert,
                         bool* inserted);
  bool ensure_global_row(int a, std::uint64_t* packed, bool allow_insert,
                         bool* inserted);
  Matrix pivot_matrix(int a) const;
  void rebuild_tt() const;
};

/// Compress a sampled function into a tensor train.
/// Seeds default to the all-zero index plus 8 random ones when empty.
/// Throws NullFunctionError when every seed evaluates to (numerically) zero.
TensorTrain tci_compress(FunctionOracle oracle, TciParams params,
                         std::vector<std::vector<int>> seeds = {});

CrossInterpolation tci_build(FunctionOracle oracle, TciParams params,
                             std::vector<std::vector<int>> seeds = {});

/// Max |f - tt| over k random indices plus every pivot of `ci`.
double residual_probe(const CrossInterpolation& ci, int k,
                      std::uint64_t rng_seed = 0x9e3779b97f4a7c15ull);

}  // namespace qttgp
