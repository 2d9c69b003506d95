// Tensor-train algebra validated against dense linear algebra on small sizes.
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qttgp/tensor_train.hpp"

using namespace qttgp;

namespace {

std::mt19937_64 rng(12345);

cplx random_cplx() {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng)};
}

TensorTrain random_tt(int n, int bond) {
  TensorTrain tt;
  tt.cores.reserve(n);
  for (int a = 0; a < n; ++a) {
    const Eigen::Index rl = (a == 0) ? 1 : bond;
    const Eigen::Index rr = (a == n - 1) ? 1 : bond;
    TrainCore c(2, rl, rr);
    for (auto& m : c.s)
      for (Eigen::Index i = 0; i < rl; ++i)
        for (Eigen::Index j = 0; j < rr; ++j) m(i, j) = random_cplx();
    tt.cores.push_back(std::move(c));
  }
  return tt;
}

TensorTrainOperator random_mpo(int n, int bond) {
  TensorTrainOperator op;
  op.cores.reserve(n);
  for (int a = 0; a < n; ++a) {
    const Eigen::Index rl = (a == 0) ? 1 : bond;
    const Eigen::Index rr = (a == n - 1) ? 1 : bond;
    TrainCore c(4, rl, rr);
    for (auto& m : c.s)
      for (Eigen::Index i = 0; i < rl; ++i)
        for (Eigen::Index j = 0; j < rr; ++j) m(i, j) = random_cplx();
    op.cores.push_back(std::move(c));
  }
  return op;
}

Vector dense(const TensorTrain& tt) { return to_dense(tt); }

// dense index convention: site 0 carries the most significant bit
Eigen::Index dense_index(const std::vector<int>& bits) {
  Eigen::Index idx = 0;
  for (int b : bits) idx = idx * 2 + b;
  return idx;
}

}  // namespace

TEST_CASE("dense reconstruction matches elementwise evaluation") {
  const int n = 8;
  auto tt = random_tt(n, 3);
  const Vector v = dense(tt);
  REQUIRE(v.size() == (Eigen::Index(1) << n));

  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 64; ++trial) {
    std::vector<int> bits(n);
    std::uint64_t packed = 0;
    for (int s = 0; s < n; ++s) {
      bits[s] = bit(rng);
      packed |= std::uint64_t(bits[s]) << s;
    }
    const cplx direct = evaluate(tt, bits);
    REQUIRE(std::abs(direct - v[dense_index(bits)]) < 1e-12);
    REQUIRE(std::abs(evaluate_packed(tt, packed) - direct) < 1e-15);
  }
}

TEST_CASE("from_dense round-trips vectors and operators") {
  const int n = 6;
  Vector v(Eigen::Index(1) << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = random_cplx();

  auto tt = from_dense(v);
  REQUIRE(tt.size() == n);
  REQUIRE((dense(tt) - v).norm() < 1e-12 * v.norm());

  const int m = 4;
  Matrix a(Eigen::Index(1) << m, Eigen::Index(1) << m);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = random_cplx();
  auto op = from_dense_operator(a);
  REQUIRE(op.size() == m);
  REQUIRE((to_dense(op) - a).norm() < 1e-12 * a.norm());
}

TEST_CASE("inner products and norms match dense arithmetic") {
  const int n = 7;
  auto a = random_tt(n, 3);
  auto b = random_tt(n, 4);
  const Vector va = dense(a), vb = dense(b);

  const cplx expect = va.dot(vb);  // Eigen dot conjugates the first factor
  REQUIRE(std::abs(inner(a, b) - expect) < 1e-10 * std::abs(expect));
  REQUIRE(std::abs(norm(a) - va.norm()) < 1e-10 * va.norm());
}

TEST_CASE("canonicalization preserves the state and orthonormalizes cores") {
  const int n = 6;
  auto tt = random_tt(n, 3);
  const Vector before = dense(tt);

  for (int center : {0, n / 2, n - 1}) {
    auto c = tt;
    canonicalize(c, center);
    REQUIRE(c.canonical_center == center);
    REQUIRE((dense(c) - before).norm() < 1e-10 * before.norm());

    for (int a = 0; a < center; ++a) {  // left-orthonormal: sum_p A_p^+ A_p = I
      Matrix g = Matrix::Zero(c.cores[a].cols(), c.cores[a].cols());
      for (const auto& m : c.cores[a].s) g += m.adjoint() * m;
      REQUIRE((g - Matrix::Identity(g.rows(), g.cols())).norm() < 1e-12);
    }
    for (int a = center + 1; a < n; ++a) {  // right-orthonormal: sum_p A_p A_p^+ = I
      Matrix g = Matrix::Zero(c.cores[a].rows(), c.cores[a].rows());
      for (const auto& m : c.cores[a].s) g += m * m.adjoint();
      REQUIRE((g - Matrix::Identity(g.rows(), g.cols())).norm() < 1e-12);
    }
  }
}

TEST_CASE("truncation honors rank caps and relative tolerance") {
  const int n = 8;
  auto tt = random_tt(n, 6);
  const Vector before = dense(tt);

  SECTION("lossless pass keeps the state") {
    auto t = tt;
    truncate(t, TruncationPolicy::by_tol(0.0));
    REQUIRE((dense(t) - before).norm() < 1e-12 * before.norm());
    REQUIRE(t.canonical_center == 0);
  }
  SECTION("rank cap is enforced") {
    auto t = tt;
    truncate(t, TruncationPolicy::by_rank(3));
    REQUIRE(t.max_bond() <= 3);
  }
  SECTION("relative tolerance bounds the error") {
    const double tol = 1e-3;
    auto t = tt;
    truncate(t, TruncationPolicy::by_tol(tol));
    // per-bond tolerance accumulates at most sqrt(n-1) in quadrature
    REQUIRE((dense(t) - before).norm() <=
            tol * std::sqrt(double(n)) * before.norm() + 1e-14);
  }
  SECTION("a product state truncates to bond one at tight tolerance") {
    auto prod = random_tt(n, 1);
    auto inflated = prod;
    // pad with explicit zeros to bond 4, then truncate back
    for (int a = 0; a < n; ++a) {
      const Eigen::Index rl = (a == 0) ? 1 : 4;
      const Eigen::Index rr = (a == n - 1) ? 1 : 4;
      TrainCore c(2, rl, rr);
      for (int p = 0; p < 2; ++p)
        c.s[p].topLeftCorner(prod.cores[a].rows(), prod.cores[a].cols()) =
            prod.cores[a].s[p];
      inflated.cores[a] = std::move(c);
    }
    auto t = inflated;
    truncate(t, TruncationPolicy::by_tol(1e-12));
    REQUIRE(t.max_bond() == 1);
    REQUIRE((dense(t) - dense(prod)).norm() < 1e-10 * dense(prod).norm());
  }
}

TEST_CASE("operator application matches dense matrix-vector products") {
  const int n = 6;
  auto op = random_mpo(n, 3);
  auto psi = random_tt(n, 3);
  const Matrix w = to_dense(op);
  const Vector v = dense(psi);

  auto out = apply_naive(op, psi, TruncationPolicy::by_tol(0.0));
  REQUIRE((dense(out) - w * v).norm() < 1e-10 * (w * v).norm());
}

TEST_CASE("operator composition matches dense matrix products") {
  const int n = 5;
  auto a = random_mpo(n, 2);
  auto b = random_mpo(n, 3);
  auto ab = mpo_multiply(a, b, TruncationPolicy::by_tol(0.0));
  const Matrix expect = to_dense(a) * to_dense(b);
  REQUIRE((to_dense(ab) - expect).norm() < 1e-10 * expect.norm());
}

TEST_CASE("identity and diagonal operators act as expected") {
  const int n = 6;
  auto psi = random_tt(n, 3);
  const Vector v = dense(psi);

  auto id = identity_mpo(n);
  auto out = apply_naive(id, psi, TruncationPolicy::by_tol(0.0));
  REQUIRE((dense(out) - v).norm() < 1e-12 * v.norm());

  auto d = random_tt(n, 2);
  auto dop = diag_to_mpo(d);
  const Vector dv = dense(d);
  auto dpsi = apply_naive(dop, psi, TruncationPolicy::by_tol(0.0));
  REQUIRE((dense(dpsi) - dv.cwiseProduct(v)).norm() <
          1e-10 * dv.cwiseProduct(v).norm());
}

TEST_CASE("hadamard product multiplies elementwise") {
  const int n = 6;
  auto a = random_tt(n, 2);
  auto b = random_tt(n, 3);
  auto h = hadamard_product(a, b, TruncationPolicy::by_tol(0.0));
  const Vector expect = dense(a).cwiseProduct(dense(b));
  REQUIRE((dense(h) - expect).norm() < 1e-10 * expect.norm());
}

TEST_CASE("fitted operator application agrees with the exact one") {
  const int n = 7;
  auto op = random_mpo(n, 3);
  auto psi = random_tt(n, 4);
  const Vector expect = to_dense(op) * dense(psi);

  SECTION("zero guess falls back gracefully") {
    TensorTrain zero = random_tt(n, 1);
    for (auto& c : zero.cores)
      for (auto& m : c.s) m.setZero();
    auto fit = apply_fit(op, psi, zero, TruncationPolicy::by_tol(1e-12));
    REQUIRE((dense(fit.tt) - expect).norm() < 1e-8 * expect.norm());
  }
  SECTION("warm start converges") {
    auto guess = apply_naive(op, psi, TruncationPolicy::by_tol(1e-8));
    auto fit = apply_fit(op, psi, guess, TruncationPolicy::by_tol(1e-12));
    REQUIRE(fit.converged);
    REQUIRE((dense(fit.tt) - expect).norm() < 1e-8 * expect.norm());
    REQUIRE(fit.overlap_norm == Catch::Approx(expect.norm()).epsilon(1e-6));
  }
  SECTION("rank-capped fit is the best it can be") {
    auto fit = apply_fit(op, psi, TensorTrain{}, TruncationPolicy::by_rank(2));
    REQUIRE(fit.tt.max_bond() <= 2);
    // error should not exceed the starting error of a hard-truncated naive apply
    auto hard = apply_naive(op, psi, TruncationPolicy::by_tol(0.0));
    truncate(hard, TruncationPolicy::by_rank(2));
    const double fit_err = (dense(fit.tt) - expect).norm();
    const double hard_err = (dense(hard) - expect).norm();
    REQUIRE(fit_err <= hard_err * 1.05 + 1e-12);
  }
}

TEST_CASE("adjoint matches the conjugate transpose") {
  const int n = 5;
  auto op = random_mpo(n, 3);
  REQUIRE((to_dense(adjoint(op)) - to_dense(op).adjoint()).norm() < 1e-12);
}

TEST_CASE("scaling and normalization behave like dense vectors") {
  const int n = 6;
  auto tt = random_tt(n, 3);
  const Vector v = dense(tt);

  auto s = tt;
  scale(s, cplx(0.3, -0.2));
  REQUIRE((dense(s) - cplx(0.3, -0.2) * v).norm() < 1e-12 * v.norm());

  auto u = tt;
  const double pre = normalize(u);
  REQUIRE(pre == Catch::Approx(v.norm()).epsilon(1e-10));
  REQUIRE(norm(u) == Catch::Approx(1.0).epsilon(1e-12));

  auto z = random_tt(n, 1);
  for (auto& c : z.cores)
    for (auto& m : c.s) m.setZero();
  REQUIRE_THROWS_AS(normalize(z), IntegrationError);
}

TEST_CASE("conjugate flips the imaginary part everywhere") {
  const int n = 5;
  auto tt = random_tt(n, 2);
  REQUIRE((dense(conjugate(tt)) - dense(tt).conjugate()).norm() < 1e-13);
}
