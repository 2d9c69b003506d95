#include "qttgp/tensor_train.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace qttgp {

namespace {

// Fuse the physical index into rows: block p occupies rows [p*rows, (p+1)*rows).
Matrix vstack(const TrainCore& c) {
  Matrix m(c.phys() * c.rows(), c.cols());
  for (int p = 0; p < c.phys(); ++p) m.middleRows(p * c.rows(), c.rows()) = c.s[p];
  return m;
}

void unvstack(const Matrix& m, TrainCore& c, int phys) {
  const Eigen::Index rows = m.rows() / phys;
  c.s.assign(phys, Matrix());
  for (int p = 0; p < phys; ++p) c.s[p] = m.middleRows(p * rows, rows);
}

// Fuse the physical index into columns: block p at [p*cols, (p+1)*cols).
Matrix hstack(const TrainCore& c) {
  Matrix m(c.rows(), c.phys() * c.cols());
  for (int p = 0; p < c.phys(); ++p) m.middleCols(p * c.cols(), c.cols()) = c.s[p];
  return m;
}

void unhstack(const Matrix& m, TrainCore& c, int phys) {
  const Eigen::Index cols = m.cols() / phys;
  c.s.assign(phys, Matrix());
  for (int p = 0; p < phys; ++p) c.s[p] = m.middleCols(p * cols, cols);
}

// QR-push the non-orthonormal factor into the right neighbour.
void left_orthonormalize_site(std::vector<TrainCore>& cores, int a) {
  TrainCore& c = cores[a];
  Matrix m = vstack(c);
  const Eigen::Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  unvstack(q, c, c.phys());
  for (auto& slice : cores[a + 1].s) slice = r * slice;
}

void right_orthonormalize_site(std::vector<TrainCore>& cores, int a) {
  TrainCore& c = cores[a];
  Matrix m = hstack(c);
  const Eigen::Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m.adjoint());
  Matrix q = (qr.householderQ() * Matrix::Identity(m.cols(), k)).adjoint();
  Matrix l = Matrix(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>()).adjoint();
  unhstack(q, c, c.phys());
  for (auto& slice : cores[a - 1].s) slice = slice * l;
}

// Singular values to keep under the policy (descending input, >= 1 kept).
int kept_rank(const Eigen::VectorXd& sv, const TruncationPolicy& policy) {
  const int n = static_cast<int>(sv.size());
  int r = std::min<long long>(n, policy.max_rank);
  if (policy.rel_tol > 0.0) {
    const double total2 = sv.squaredNorm();
    const double budget = policy.rel_tol * policy.rel_tol * total2;
    double tail2 = 0.0;
    int keep = n;
    for (int i = n - 1; i >= 0; --i) {
      tail2 += sv[i] * sv[i];
      if (tail2 > budget) break;
      keep = i;
    }
    r = std::min(r, keep);
  }
  return std::max(r, 1);
}

// Left-canonicalize then sweep right-to-left with per-bond SVD truncation.
// Leaves the chain right-canonical with the center on site 0.
void truncate_cores(std::vector<TrainCore>& cores, const TruncationPolicy& policy) {
  const int n = static_cast<int>(cores.size());
  if (n < 2) return;
  for (int a = 0; a < n - 1; ++a) left_orthonormalize_site(cores, a);
  for (int a = n - 1; a >= 1; --a) {
    Matrix m = hstack(cores[a]);
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int r = kept_rank(svd.singularValues(), policy);
    Matrix vh = svd.matrixV().leftCols(r).adjoint();
    unhstack(vh, cores[a], cores[a].phys());
    Matrix us = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    for (auto& slice : cores[a - 1].s) slice = slice * us;
  }
}

void check_same_length(int a, int b) {
  if (a != b) throw std::invalid_argument("tensor train length mismatch");
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      k.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return k;
}

std::vector<int> bond_dims_of(const std::vector<TrainCore>& cores) {
  std::vector<int> out;
  for (size_t a = 0; a + 1 < cores.size(); ++a)
    out.push_back(static_cast<int>(cores[a].cols()));
  return out;
}

int max_bond_of(const std::vector<TrainCore>& cores) {
  int m = cores.empty() ? 0 : 1;
  for (size_t a = 0; a + 1 < cores.size(); ++a)
    m = std::max<int>(m, static_cast<int>(cores[a].cols()));
  return m;
}

}  // namespace

std::vector<int> TensorTrain::bond_dims() const { return bond_dims_of(cores); }
int TensorTrain::max_bond() const { return max_bond_of(cores); }
std::vector<int> TensorTrainOperator::bond_dims() const { return bond_dims_of(cores); }
int TensorTrainOperator::max_bond() const { return max_bond_of(cores); }

// ----------------------------------------------------------------- evaluation

cplx evaluate(const TensorTrain& tt, const std::vector<int>& bits) {
  if (static_cast<int>(bits.size()) != tt.size())
    throw std::invalid_argument("evaluate: index length mismatch");
  RowVector v = RowVector::Ones(1);
  for (int a = 0; a < tt.size(); ++a) {
    const int b = bits[a];
    if (b < 0 || b > 1) throw std::invalid_argument("evaluate: bit out of range");
    v = v * tt.cores[a].s[b];
  }
  return v(0);
}

cplx evaluate_packed(const TensorTrain& tt, std::uint64_t packed) {
  RowVector v = RowVector::Ones(1);
  for (int a = 0; a < tt.size(); ++a)
    v = v * tt.cores[a].s[(packed >> a) & 1u];
  return v(0);
}

cplx inner(const TensorTrain& a, const TensorTrain& b) {
  check_same_length(a.size(), b.size());
  Matrix e = Matrix::Ones(1, 1);
  for (int i = 0; i < a.size(); ++i) {
    const TrainCore& ca = a.cores[i];
    const TrainCore& cb = b.cores[i];
    Matrix next = Matrix::Zero(ca.cols(), cb.cols());
    for (int p = 0; p < 2; ++p) next.noalias() += ca.s[p].adjoint() * e * cb.s[p];
    e.swap(next);
  }
  return e(0, 0);
}

double norm(const TensorTrain& tt) {
  const double n2 = std::real(inner(tt, tt));
  return std::sqrt(std::max(n2, 0.0));
}

namespace {
template <class Train>
int max_bond_impl(const Train& t) {
  Eigen::Index m = 1;
  for (int i = 0; i + 1 < t.size(); ++i) m = std::max(m, t.cores[i].cols());
  return static_cast<int>(m);
}
}  // namespace

int max_bond(const TensorTrain& tt) { return max_bond_impl(tt); }
int max_bond(const TensorTrainOperator& op) { return max_bond_impl(op); }

// --------------------------------------------------------------- canonical ops

void canonicalize(TensorTrain& tt, int center) {
  if (center < 0 || center >= tt.size())
    throw std::invalid_argument("canonicalize: center out of range");
  if (tt.canonical_center && *tt.canonical_center == center) return;
  for (int a = 0; a < center; ++a) left_orthonormalize_site(tt.cores, a);
  for (int a = tt.size() - 1; a > center; --a) right_orthonormalize_site(tt.cores, a);
  tt.canonical_center = center;
}

void truncate(TensorTrain& tt, const TruncationPolicy& policy) {
  truncate_cores(tt.cores, policy);
  tt.canonical_center = tt.size() > 0 ? std::optional<int>(0) : std::nullopt;
}

void truncate(TensorTrainOperator& op, const TruncationPolicy& policy) {
  truncate_cores(op.cores, policy);
}

void scale(TensorTrain& tt, cplx factor) {
  if (tt.size() == 0) return;
  const int c = tt.canonical_center.value_or(0);
  for (auto& slice : tt.cores[c].s) slice *= factor;
}

double normalize(TensorTrain& tt) {
  const double n = norm(tt);
  if (!(n > 1e-300))
    throw IntegrationError("normalize: vanishing norm");
  scale(tt, cplx(1.0 / n, 0.0));
  return n;
}

// --------------------------------------------------------------- applications

TensorTrain apply_naive(const TensorTrainOperator& op, const TensorTrain& tt,
                        const TruncationPolicy& policy) {
  check_same_length(op.size(), tt.size());
  TensorTrain out;
  out.cores.resize(tt.size());
  for (int a = 0; a < tt.size(); ++a) {
    TrainCore c(2, op.cores[a].rows() * tt.cores[a].rows(),
                op.cores[a].cols() * tt.cores[a].cols());
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 2; ++i)
        c.s[o] += kron(op.cores[a].s[o * 2 + i], tt.cores[a].s[i]);
    out.cores[a] = std::move(c);
  }
  truncate(out, policy);
  return out;
}

TensorTrainOperator mpo_multiply(const TensorTrainOperator& a,
                                 const TensorTrainOperator& b,
                                 const TruncationPolicy& policy) {
  check_same_length(a.size(), b.size());
  TensorTrainOperator out;
  out.cores.resize(a.size());
  for (int i = 0; i < a.size(); ++i) {
    TrainCore c(4, a.cores[i].rows() * b.cores[i].rows(),
                a.cores[i].cols() * b.cores[i].cols());
    for (int o = 0; o < 2; ++o)
      for (int in = 0; in < 2; ++in)
        for (int m = 0; m < 2; ++m)
          c.s[o * 2 + in] += kron(a.cores[i].s[o * 2 + m], b.cores[i].s[m * 2 + in]);
    out.cores[i] = std::move(c);
  }
  truncate(out, policy);
  return out;
}

TensorTrain hadamard_product(const TensorTrain& a, const TensorTrain& b,
                             const TruncationPolicy& policy) {
  check_same_length(a.size(), b.size());
  TensorTrain out;
  out.cores.resize(a.size());
  for (int i = 0; i < a.size(); ++i) {
    TrainCore c(2, a.cores[i].rows() * b.cores[i].rows(),
                a.cores[i].cols() * b.cores[i].cols());
    for (int p = 0; p < 2; ++p) c.s[p] = kron(a.cores[i].s[p], b.cores[i].s[p]);
    out.cores[i] = std::move(c);
  }
  truncate(out, policy);
  return out;
}

TensorTrainOperator hadamard_product(const TensorTrainOperator& a,
                                     const TensorTrainOperator& b,
                                     const TruncationPolicy& policy) {
  check_same_length(a.size(), b.size());
  TensorTrainOperator out;
  out.cores.resize(a.size());
  for (int i = 0; i < a.size(); ++i) {
    TrainCore c(4, a.cores[i].rows() * b.cores[i].rows(),
                a.cores[i].cols() * b.cores[i].cols());
    for (int p = 0; p < 4; ++p) c.s[p] = kron(a.cores[i].s[p], b.cores[i].s[p]);
    out.cores[i] = std::move(c);
  }
  truncate(out, policy);
  return out;
}

TensorTrain hadamard_apply(const TensorTrain& diag, const TensorTrain& tt,
                           const TruncationPolicy& policy) {
  // The diagonal-operator promotion is fused away: a diagonal operator core
  // has W[p][p] = D_p and zero off-diagonal, so the contraction reduces to the
  // elementwise product core by core.
  return hadamard_product(diag, tt, policy);
}

TensorTrainOperator diag_to_mpo(const TensorTrain& diag) {
  TensorTrainOperator out;
  out.cores.resize(diag.size());
  for (int a = 0; a < diag.size(); ++a) {
    TrainCore c(4, diag.cores[a].rows(), diag.cores[a].cols());
    c.s[0] = diag.cores[a].s[0];
    c.s[3] = diag.cores[a].s[1];
    out.cores[a] = std::move(c);
  }
  return out;
}

TensorTrainOperator identity_mpo(int n_sites) {
  TensorTrainOperator out;
  out.cores.resize(n_sites);
  for (int a = 0; a < n_sites; ++a) {
    TrainCore c(4, 1, 1);
    c.s[0](0, 0) = 1.0;
    c.s[3](0, 0) = 1.0;
    out.cores[a] = std::move(c);
  }
  return out;
}

TensorTrainOperator adjoint(const TensorTrainOperator& op) {
  TensorTrainOperator out;
  out.cores.resize(op.size());
  for (int a = 0; a < op.size(); ++a) {
    TrainCore c(4, op.cores[a].rows(), op.cores[a].cols());
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 2; ++i)
        c.s[o * 2 + i] = op.cores[a].s[i * 2 + o].conjugate();
    out.cores[a] = std::move(c);
  }
  return out;
}

TensorTrain conjugate(const TensorTrain& tt) {
  TensorTrain out = tt;
  for (auto& core : out.cores)
    for (auto& slice : core.s) slice = slice.conjugate();
  return out;
}

// ---------------------------------------------------------------- conversions

Vector to_dense(const TensorTrain& tt, int max_sites) {
  const int n = tt.size();
  if (n > max_sites) throw std::invalid_argument("to_dense: too many sites");
  // dense index = sum over sites of bit_s * 2^(n-1-s)  (site 0 most significant)
  Matrix acc = Matrix::Ones(1, 1);
  for (int a = 0; a < n; ++a) {
    Matrix next(acc.rows() * 2, tt.cores[a].cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r)
      for (int p = 0; p < 2; ++p)
        next.row(r * 2 + p) = acc.row(r) * tt.cores[a].s[p];
    acc.swap(next);
  }
  return acc.col(0);
}

Matrix to_dense(const TensorTrainOperator& op, int max_sites) {
  const int n = op.size();
  if (n > max_sites) throw std::invalid_argument("to_dense: too many sites");
  // accumulate over the fused (out,in) index, then scatter into the matrix
  Matrix acc = Matrix::Ones(1, 1);
  for (int a = 0; a < n; ++a) {
    Matrix next(acc.rows() * 4, op.cores[a].cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r)
      for (int p = 0; p < 4; ++p)
        next.row(r * 4 + p) = acc.row(r) * op.cores[a].s[p];
    acc.swap(next);
  }
  const std::uint64_t dim = 1ull << n;
  Matrix m(dim, dim);
  for (std::uint64_t f = 0; f < (1ull << (2 * n)); ++f) {
    std::uint64_t row = 0, col = 0, x = f;
    for (int a = n - 1; a >= 0; --a) {
      const std::uint64_t local = x & 3u;  // out*2+in at site a
      row |= (local >> 1) << (n - 1 - a);
      col |= (local & 1u) << (n - 1 - a);
      x >>= 2;
    }
    m(row, col) = acc(f, 0);
  }
  return m;
}

namespace {

std::vector<TrainCore> from_dense_train(const Vector& v, int phys) {
  const auto len = v.size();
  int n = 0;
  Eigen::Index acc = 1;
  while (acc < len) { acc *= phys; ++n; }
  if (acc != len || n == 0)
    throw std::invalid_argument("from_dense: length is not a power of the local dim");

  std::vector<TrainCore> cores(n);
  Matrix m = v.transpose();  // (1 x len), row bond 1
  Eigen::Index rem = len;
  for (int a = 0; a < n - 1; ++a) {
    const Eigen::Index rprev = m.rows();
    rem /= phys;
    Matrix m2(rprev * phys, rem);
    for (Eigen::Index alpha = 0; alpha < rprev; ++alpha)
      for (int b = 0; b < phys; ++b)
        m2.row(b * rprev + alpha) = m.row(alpha).segment(b * rem, rem);
    Eigen::BDCSVD<Matrix> svd(m2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int r = 1;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > sv[0] * 1e-14) r = i + 1;
    TrainCore c(phys, rprev, r);
    for (int b = 0; b < phys; ++b) c.s[b] = svd.matrixU().block(b * rprev, 0, rprev, r);
    cores[a] = std::move(c);
    m = sv.head(r).asDiagonal() * svd.matrixV().leftCols(r).adjoint();
  }
  TrainCore last(phys, m.rows(), 1);
  for (int b = 0; b < phys; ++b) last.s[b] = m.col(b);
  cores[n - 1] = std::move(last);
  return cores;
}

}  // namespace

TensorTrain from_dense(const Vector& v) {
  TensorTrain tt;
  tt.cores = from_dense_train(v, 2);
  return tt;
}

TensorTrainOperator from_dense_operator(const Matrix& m) {
  const Eigen::Index dim = m.rows();
  if (m.cols() != dim) throw std::invalid_argument("from_dense_operator: not square");
  int n = 0;
  while ((Eigen::Index(1) << n) < dim) ++n;
  if ((Eigen::Index(1) << n) != dim)
    throw std::invalid_argument("from_dense_operator: dim not a power of 2");
  if (n > 10) throw std::invalid_argument("from_dense_operator: too large");
  Vector w(dim * dim);
  for (Eigen::Index row = 0; row < dim; ++row)
    for (Eigen::Index col = 0; col < dim; ++col) {
      std::uint64_t f = 0;
      for (int a = 0; a < n; ++a) {
        const std::uint64_t o = (row >> (n - 1 - a)) & 1u;
        const std::uint64_t i = (col >> (n - 1 - a)) & 1u;
        f = f * 4 + (o * 2 + i);
      }
      w(f) = m(row, col);
    }
  TensorTrainOperator op;
  op.cores = from_dense_train(w, 4);
  return op;
}

// -------------------------------------------------------------------- fitting

namespace {

// Environments for <phi | W psi>, stored as (chi_phi x chi_W*chi_psi) with
// column index w*chi_psi + s.

Matrix left_update(const Matrix& e, const TrainCore& phi, const TrainCore& w,
                   const TrainCore& psi) {
  const Eigen::Index wl = w.rows(), wr = w.cols();
  const Eigen::Index sl = psi.rows(), sr = psi.cols();
  const Eigen::Index fl = phi.rows(), fr = phi.cols();
  Matrix c[2];
  for (int q = 0; q < 2; ++q) {
    c[q].resize(fl, wl * sr);
    for (Eigen::Index b = 0; b < wl; ++b)
      c[q].middleCols(b * sr, sr).noalias() = e.middleCols(b * sl, sl) * psi.s[q];
  }
  Matrix out = Matrix::Zero(fr, wr * sr);
  for (int p = 0; p < 2; ++p) {
    Matrix d = Matrix::Zero(fl, wr * sr);
    for (int q = 0; q < 2; ++q) {
      const Matrix& wpq = w.s[p * 2 + q];
      for (Eigen::Index b = 0; b < wl; ++b)
        for (Eigen::Index b2 = 0; b2 < wr; ++b2) {
          const cplx coef = wpq(b, b2);
          if (coef != cplx(0.0, 0.0))
            d.middleCols(b2 * sr, sr) += coef * c[q].middleCols(b * sr, sr);
        }
    }
    out.noalias() += phi.s[p].adjoint() * d;
  }
  return out;
}

Matrix right_update(const Matrix& e, const TrainCore& phi, const TrainCore& w,
                    const TrainCore& psi) {
  const Eigen::Index wl = w.rows(), wr = w.cols();
  const Eigen::Index sl = psi.rows(), sr = psi.cols();
  const Eigen::Index fl = phi.rows(), fr = phi.cols();
  Matrix b[2];
  for (int q = 0; q < 2; ++q) {
    b[q].resize(fr, wr * sl);
    for (Eigen::Index v = 0; v < wr; ++v)
      b[q].middleCols(v * sl, sl).noalias() =
          e.middleCols(v * sr, sr) * psi.s[q].transpose();
  }
  Matrix out = Matrix::Zero(fl, wl * sl);
  for (int p = 0; p < 2; ++p) {
    Matrix d = Matrix::Zero(fr, wl * sl);
    for (int q = 0; q < 2; ++q) {
      const Matrix& wpq = w.s[p * 2 + q];
      for (Eigen::Index v = 0; v < wl; ++v)
        for (Eigen::Index v2 = 0; v2 < wr; ++v2) {
          const cplx coef = wpq(v, v2);
          if (coef != cplx(0.0, 0.0))
            d.middleCols(v * sl, sl) += coef * b[q].middleCols(v2 * sl, sl);
        }
    }
    out.noalias() += phi.s[p].conjugate() * d;
  }
  return out;
}

// Project W|psi> onto the two-site block (a, a+1): returns G[p][p'] matrices
// of shape (chi_phi_left x chi_phi_right).
std::array<std::array<Matrix, 2>, 2> two_site_target(
    const Matrix& le, const Matrix& re, const TrainCore& wa, const TrainCore& wb,
    const TrainCore& pa, const TrainCore& pb, Eigen::Index flphi, Eigen::Index frphi) {
  const Eigen::Index wl = wa.rows(), wm = wa.cols(), wr = wb.cols();
  const Eigen::Index sl = pa.rows(), sm = pa.cols(), sr = pb.cols();
  // absorb site a without the phi contraction
  Matrix c[2];
  for (int q = 0; q < 2; ++q) {
    c[q].resize(flphi, wl * sm);
    for (Eigen::Index b = 0; b < wl; ++b)
      c[q].middleCols(b * sm, sm).noalias() = le.middleCols(b * sl, sl) * pa.s[q];
  }
  Matrix z[2];
  for (int p = 0; p < 2; ++p) {
    z[p] = Matrix::Zero(flphi, wm * sm);
    for (int q = 0; q < 2; ++q) {
      const Matrix& wpq = wa.s[p * 2 + q];
      for (Eigen::Index b = 0; b < wl; ++b)
        for (Eigen::Index b2 = 0; b2 < wm; ++b2) {
          const cplx coef = wpq(b, b2);
          if (coef != cplx(0.0, 0.0))
            z[p].middleCols(b2 * sm, sm) += coef * c[q].middleCols(b * sm, sm);
        }
    }
  }
  std::array<std::array<Matrix, 2>, 2> g;
  for (int p = 0; p < 2; ++p) {
    Matrix c2[2];
    for (int q = 0; q < 2; ++q) {
      c2[q].resize(flphi, wm * sr);
      for (Eigen::Index b = 0; b < wm; ++b)
        c2[q].middleCols(b * sr, sr).noalias() = z[p].middleCols(b * sm, sm) * pb.s[q];
    }
    for (int p2 = 0; p2 < 2; ++p2) {
      Matrix zz = Matrix::Zero(flphi, wr * sr);
      for (int q = 0; q < 2; ++q) {
        const Matrix& wpq = wb.s[p2 * 2 + q];
        for (Eigen::Index b = 0; b < wm; ++b)
          for (Eigen::Index b2 = 0; b2 < wr; ++b2) {
            const cplx coef = wpq(b, b2);
            if (coef != cplx(0.0, 0.0))
              zz.middleCols(b2 * sr, sr) += coef * c2[q].middleCols(b * sr, sr);
          }
      }
      g[p][p2].noalias() = zz * re.transpose();
      (void)frphi;
    }
  }
  return g;
}

}  // namespace

FitResult apply_fit(const TensorTrainOperator& op, const TensorTrain& tt,
                    const TensorTrain& guess, const TruncationPolicy& policy,
                    int max_sweeps) {
  check_same_length(op.size(), tt.size());
  if (guess.size() != 0) check_same_length(op.size(), guess.size());
  const int n = tt.size();
  if (n == 1) {
    TensorTrain out;
    out.cores.resize(1);
    TrainCore c(2, 1, 1);
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 2; ++i) c.s[o] += op.cores[0].s[o * 2 + i] * tt.cores[0].s[i];
    out.cores[0] = std::move(c);
    const double out_norm = norm(out);
    return {std::move(out), true, 0, out_norm};
  }

  TensorTrain phi = guess;
  if (phi.size() == 0 || norm(phi) < 1e-300) phi = apply_naive(op, tt, policy);
  truncate(phi, policy);          // also brings the center to site 0
  canonicalize(phi, 0);

  std::vector<Matrix> ls(n + 1), rs(n + 1);
  ls[0] = Matrix::Ones(1, 1);
  rs[n] = Matrix::Ones(1, 1);
  for (int a = n - 1; a >= 1; --a)
    rs[a] = right_update(rs[a + 1], phi.cores[a], op.cores[a], tt.cores[a]);

  const double stop_tol = policy.rel_tol > 0 ? policy.rel_tol : 1e-13;
  double prev_f = -1.0;
  bool converged = false;
  int sweeps_done = 0;
  double theta_norm = 0.0;

  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    // left-to-right
    for (int a = 0; a <= n - 2; ++a) {
      auto g = two_site_target(ls[a], rs[a + 2], op.cores[a], op.cores[a + 1],
                               tt.cores[a], tt.cores[a + 1],
                               phi.cores[a].rows(), phi.cores[a + 1].cols());
      const Eigen::Index fl = g[0][0].rows(), fr = g[0][0].cols();
      Matrix theta(2 * fl, 2 * fr);
      for (int p = 0; p < 2; ++p)
        for (int p2 = 0; p2 < 2; ++p2)
          theta.block(p * fl, p2 * fr, fl, fr) = g[p][p2];
      Eigen::BDCSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const int r = kept_rank(svd.singularValues(), policy);
      unvstack(svd.matrixU().leftCols(r), phi.cores[a], 2);
      Matrix svh = svd.singularValues().head(r).asDiagonal() *
                   svd.matrixV().leftCols(r).adjoint();
      unhstack(svh, phi.cores[a + 1], 2);
      theta_norm = svd.singularValues().head(r).norm();
      ls[a + 1] = left_update(ls[a], phi.cores[a], op.cores[a], tt.cores[a]);
    }
    // right-to-left
    for (int a = n - 2; a >= 0; --a) {
      auto g = two_site_target(ls[a], rs[a + 2], op.cores[a], op.cores[a + 1],
                               tt.cores[a], tt.cores[a + 1],
                               phi.cores[a].rows(), phi.cores[a + 1].cols());
      const Eigen::Index fl = g[0][0].rows(), fr = g[0][0].cols();
      Matrix theta(2 * fl, 2 * fr);
      for (int p = 0; p < 2; ++p)
        for (int p2 = 0; p2 < 2; ++p2)
          theta.block(p * fl, p2 * fr, fl, fr) = g[p][p2];
      Eigen::BDCSVD<Matrix> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const int r = kept_rank(svd.singularValues(), policy);
      Matrix us = svd.matrixU().leftCols(r) *
                  svd.singularValues().head(r).asDiagonal();
      unvstack(us, phi.cores[a], 2);
      unhstack(svd.matrixV().leftCols(r).adjoint(), phi.cores[a + 1], 2);
      theta_norm = svd.singularValues().head(r).norm();
      rs[a + 1] = right_update(rs[a + 2], phi.cores[a + 1], op.cores[a + 1],
                               tt.cores[a + 1]);
    }
    ++sweeps_done;
    // fit functional is -|theta|^2 at the final bond; monotone under sweeps
    const double f = theta_norm * theta_norm;
    if (prev_f >= 0.0 && std::abs(f - prev_f) <= stop_tol * std::max(f, 1e-300)) {
      converged = true;
    }
    prev_f = f;
  }

  phi.canonical_center = 0;
  return {std::move(phi), converged, sweeps_done, theta_norm};
}

}  // namespace qttgp
