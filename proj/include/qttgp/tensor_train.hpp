#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "qttgp/common.hpp"

namespace qttgp {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RowVector = Eigen::RowVectorXcd;

/// One site tensor, stored as one (left_dim x right_dim) matrix per value of
/// the physical index.  States use 2 slices; operators use 4 fused slices
/// with the convention  slice index = out * 2 + in.
struct TrainCore {
  std::vector<Matrix> s;

  TrainCore() = default;
  TrainCore(int phys, Eigen::Index rows, Eigen::Index cols)
      : s(phys, Matrix::Zero(rows, cols)) {}

  int phys() const { return static_cast<int>(s.size()); }
  Eigen::Index rows() const { return s.empty() ? 0 : s[0].rows(); }
  Eigen::Index cols() const { return s.empty() ? 0 : s[0].cols(); }
};

/// Tensor train over n binary sites; boundary bonds are 1.
struct TensorTrain {
  std::vector<TrainCore> cores;
  /// Site index such that all cores to the left are left-orthonormal and all
  /// to the right are right-orthonormal.  Empty when unknown.
  std::optional<int> canonical_center;

  int size() const { return static_cast<int>(cores.size()); }
  std::vector<int> bond_dims() const;  ///< interior bonds, size() - 1 entries
  int max_bond() const;
};

/// Matrix product operator over n binary sites (physical dim 4, fused out/in).
struct TensorTrainOperator {
  std::vector<TrainCore> cores;
  int size() const { return static_cast<int>(cores.size()); }
  std::vector<int> bond_dims() const;
  int max_bond() const;
};

struct FitResult {
  TensorTrain tt;
  bool converged = false;
  int sweeps = 0;
  double overlap_norm = 0.0;  ///< |<fit | op state>| at the last sweep
};

// ---------------------------------------------------------------- evaluation

/// Amplitude at one computational-basis index; bits[i] in {0,1} addresses site i.
cplx evaluate(const TensorTrain& tt, const std::vector<int>& bits);

/// Same, with bit i of `packed` addressing site i (site 0 = lowest bit).
cplx evaluate_packed(const TensorTrain& tt, std::uint64_t packed);

/// <a|b> with complex conjugation on `a`.  Throws on length mismatch.
cplx inner(const TensorTrain& a, const TensorTrain& b);

double norm(const TensorTrain& tt);

/// Largest bond dimension (1 for a single-site train).
int max_bond(const TensorTrain& tt);
int max_bond(const TensorTrainOperator& op);

// -------------------------------------------------------------- canonical ops

/// Bring to mixed-canonical form with the orthogonality center at `center`.
void canonicalize(TensorTrain& tt, int center);

/// SVD truncation: left-canonicalize, then sweep right-to-left truncating each
/// bond at the policy's relative Frobenius tolerance and rank cap.  Result is
/// canonical with center 0; its norm never exceeds the input norm (+1e-12).
void truncate(TensorTrain& tt, const TruncationPolicy& policy);
void truncate(TensorTrainOperator& op, const TruncationPolicy& policy);

/// Multiply all amplitudes by a scalar.
void scale(TensorTrain& tt, cplx factor);

/// Rescale to unit L2 norm and return the norm the train had before.
/// Throws IntegrationError if the norm is ~0.
double normalize(TensorTrain& tt);

// ------------------------------------------------------------- applications

/// op * tt by direct core contraction (bond = chi_op * chi_tt) + truncate.
TensorTrain apply_naive(const TensorTrainOperator& op, const TensorTrain& tt,
                        const TruncationPolicy& policy);

/// Two-site variational fit of op * tt starting from `guess`.  Sweeps until
/// the relative change of the fit functional drops below policy.rel_tol or
/// max_sweeps is exhausted; returns the best iterate and a convergence flag.
/// An empty (or numerically zero) guess falls back to a truncated exact apply.
FitResult apply_fit(const TensorTrainOperator& op, const TensorTrain& tt,
                    const TensorTrain& guess, const TruncationPolicy& policy,
                    int max_sweeps = 6);

/// Operator product a*b (apply b first), direct contraction + truncate.
TensorTrainOperator mpo_multiply(const TensorTrainOperator& a,
                                 const TensorTrainOperator& b,
                                 const TruncationPolicy& policy);

///// Elementwise product of two trains:  out(idx) = a(idx) * b(idx).
TensorTrain hadamard_product(const TensorTrain& a, const TensorTrain& b,
                             const TruncationPolicy& policy);

/// Elementwise (entrywise) product of two operators.
TensorTrainOperator hadamard_product(const TensorTrainOperator& a,
                                     const TensorTrainOperator& b,
                                     const TruncationPolicy& policy);

/// Apply a diagonal operator given as the tensor train of its diagonal.
/// The diagonal is promoted to a (virtual) diagonal operator core by core —
/// the result equals hadamard_product(diag, tt, policy).
TensorTrain hadamard_apply(const TensorTrain& diag, const TensorTrain& tt,
                           const TruncationPolicy& policy);

/// Promote the train of a diagonal to an explicit diagonal operator.
TensorTrainOperator diag_to_mpo(const TensorTrain& diag);

TensorTrainOperator identity_mpo(int n_sites);

/// Hermitian adjoint: conjugate and swap the in/out legs.
TensorTrainOperator adjoint(const TensorTrainOperator& op);

TensorTrain conjugate(const TensorTrain& tt);

// ------------------------------------------------------ dense conversions
// Exact converters for small site counts; used for cross-checks and the
// dense reference path.  Guarded against absurd sizes.

Vector to_dense(const TensorTrain& tt, int max_sites = 26);
Matrix to_dense(const TensorTrainOperator& op, int max_sites = 13);

/// Exact tensorization of a length-2^n vector by successive SVD splits.
TensorTrain from_dense(const Vector& v);

/// Exact operator train of a 2^n x 2^n matrix.
TensorTrainOperator from_dense_operator(const Matrix& m);

}  // namespace qttgp
