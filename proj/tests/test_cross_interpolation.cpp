// Sampling-based compression checked against exhaustive evaluation.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qttgp/cross_interpolation.hpp"

using namespace qttgp;

namespace {

std::mt19937_64 rng(99);

TensorTrain random_tt(int n, int bond) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TensorTrain tt;
  for (int a = 0; a < n; ++a) {
    const Eigen::Index rl = (a == 0) ? 1 : bond;
    const Eigen::Index rr = (a == n - 1) ? 1 : bond;
    TrainCore c(2, rl, rr);
    for (auto& m : c.s)
      for (Eigen::Index i = 0; i < rl; ++i)
        for (Eigen::Index j = 0; j < rr; ++j) m(i, j) = cplx(u(rng), u(rng));
    tt.cores.push_back(std::move(c));
  }
  return tt;
}

double max_dense_error(const TensorTrain& approx, const FunctionOracle& f) {
  const int n = f.sites();
  double worst = 0.0;
  for (std::uint64_t m = 0; m < (1ull << n); ++m)
    worst = std::max(worst, std::abs(f(m) - evaluate_packed(approx, m)));
  return worst;
}

}  // namespace

TEST_CASE("oracle caches, counts and tracks the largest sample") {
  int calls = 0;
  FunctionOracle f(4, [&](const std::vector<int>& b) {
    ++calls;
    return cplx(double(b[0] + 2 * b[1] + 4 * b[2] + 8 * b[3]), 0.0);
  });
  REQUIRE(f(0b0101) == cplx(5.0, 0.0));
  REQUIRE(f(0b0101) == cplx(5.0, 0.0));
  REQUIRE(calls == 1);
  REQUIRE(f.eval_count() == 1);
  // bits vector addresses site i at position i, matching bit i of the key
  REQUIRE(f.at({1, 0, 1, 0}) == cplx(5.0, 0.0));
  REQUIRE(calls == 1);
  REQUIRE(f(0b1111) == cplx(15.0, 0.0));
  REQUIRE(f.max_abs() == 15.0);
}

TEST_CASE("separable functions compress to bond dimension one") {
  const int n = 10;
  FunctionOracle f(n, [](const std::vector<int>& b) {
    cplx v = 1.0;
    for (size_t s = 0; s < b.size(); ++s)
      v *= (b[s] ? cplx(0.6, 0.3) : cplx(1.0, -0.1 * double(s)));
    return v;
  });
  auto ci = tci_build(std::move(f), TciParams{});
  REQUIRE(ci.converged());
  for (int r : ci.ranks()) REQUIRE(r == 1);
  REQUIRE(residual_probe(ci, 200) < 1e-9 * ci.oracle().max_abs());
}

TEST_CASE("low-rank functions are recovered from few samples") {
  const int n = 12;
  auto target = random_tt(n, 3);
  FunctionOracle f(n, [&](const std::vector<int>& b) { return evaluate(target, b); });

  auto ci = tci_build(std::move(f), TciParams{});
  REQUIRE(ci.converged());

  FunctionOracle probe(n, [&](const std::vector<int>& b) { return evaluate(target, b); });
  const double scale = norm(target) / std::sqrt(double(1ull << n));
  REQUIRE(max_dense_error(ci.tt(), probe) < 1e-8 * scale * 100);

  // far fewer samples than the 4096 grid points
  REQUIRE(ci.oracle().eval_count() < 2500);
  for (int r : ci.ranks()) REQUIRE(r <= 8);
}

TEST_CASE("smooth oscillatory profiles compress to modest rank") {
  const int n = 14;  // 16384 points on [-1, 1)
  const double h = 2.0 / double(1ull << n);
  FunctionOracle f(n, [&](const std::vector<int>& b) {
    std::uint64_t m = 0;
    for (int s = 0; s < n; ++s) m = (m << 1) | std::uint64_t(b[s]);
    const double x = -1.0 + double(m) * h;
    return cplx(std::exp(-3.0 * x * x), 0.0) * std::polar(1.0, 4.0 * x);
  });
  auto ci = tci_build(std::move(f), TciParams{.tol = 1e-10});
  REQUIRE(ci.converged());
  REQUIRE(residual_probe(ci, 500) < 1e-8);
  for (int r : ci.ranks()) REQUIRE(r <= 14);
  REQUIRE(ci.oracle().eval_count() < 9000);
}

TEST_CASE("zero functions are rejected") {
  FunctionOracle f(8, [](const std::vector<int>&) { return cplx(0.0, 0.0); });
  REQUIRE_THROWS_AS(tci_compress(std::move(f), TciParams{}), NullFunctionError);
}

TEST_CASE("rank caps are honored and reported honestly") {
  const int n = 8;
  std::mt19937_64 local(7);
  std::vector<cplx> table(1ull << n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : table) v = cplx(u(local), u(local));  // full-rank noise
  FunctionOracle f(n, [&](const std::vector<int>& b) {
    std::uint64_t m = 0;
    for (int s = 0; s < n; ++s) m |= std::uint64_t(b[s]) << s;
    return table[m];
  });
  auto ci = tci_build(std::move(f), TciParams{.tol = 1e-10, .max_rank = 3});
  REQUIRE_FALSE(ci.converged());
  for (int r : ci.ranks()) REQUIRE(r <= 3);
}

TEST_CASE("seeds localize sharply peaked functions") {
  const int n = 12;
  const std::uint64_t peak = 0b101101001011;  // dense index of the bump
  const double h = 2.0 / double(1ull << n);
  FunctionOracle f(n, [&](const std::vector<int>& b) {
    std::uint64_t m = 0;
    for (int s = 0; s < n; ++s) m = (m << 1) | std::uint64_t(b[s]);
    const double d = (double(m) - double(peak)) * h;
    return cplx(std::exp(-d * d * 1e4), 0.0);
  });
  std::vector<int> seed(n);
  for (int s = 0; s < n; ++s) seed[s] = static_cast<int>((peak >> (n - 1 - s)) & 1u);
  auto ci = tci_build(std::move(f), TciParams{.tol = 1e-9}, {seed});
  REQUIRE(ci.converged());
  REQUIRE(std::abs(ci.oracle()(ci.max_abs_pivot())) ==
          Catch::Approx(1.0).epsilon(1e-9));
  // pivots are interpolated exactly, whatever the conditioning
  double worst_pivot = 0.0;
  for (auto p : ci.pivot_indices())
    worst_pivot = std::max(
        worst_pivot, std::abs(ci.oracle()(p) - evaluate_packed(ci.tt(), p)));
  REQUIRE(worst_pivot < 1e-10);
  // the certification is sampling-based: error may survive only in tail
  // shells below the probe detection level, bounded well under max|f|
  FunctionOracle probe(n, [&](const std::vector<int>& b) {
    std::uint64_t m = 0;
    for (int s = 0; s < n; ++s) m = (m << 1) | std::uint64_t(b[s]);
    const double d = (double(m) - double(peak)) * h;
    return cplx(std::exp(-d * d * 1e4), 0.0);
  });
  REQUIRE(max_dense_error(ci.tt(), probe) < 1e-5);
}

TEST_CASE("extra seeds are absorbed without breaking nesting") {
  const int n = 10;
  auto target = random_tt(n, 2);
  FunctionOracle f(n, [&](const std::vector<int>& b) { return evaluate(target, b); });
  std::mt19937_64 local(3);
  std::vector<std::vector<int>> seeds;
  for (int k = 0; k < 6; ++k) {
    std::vector<int> s(n);
    for (auto& b : s) b = static_cast<int>(local() & 1u);
    seeds.push_back(std::move(s));
  }
  seeds.push_back(seeds.front());  // duplicate seed must be harmless
  auto ci = tci_build(std::move(f), TciParams{}, seeds);
  REQUIRE(ci.converged());
  REQUIRE(residual_probe(ci, 300) < 1e-8 * ci.oracle().max_abs());
}

TEST_CASE("single-site functions are represented directly") {
  FunctionOracle f(1, [](const std::vector<int>& b) {
    return b[0] ? cplx(2.0, 1.0) : cplx(-1.0, 0.5);
  });
  auto tt = tci_compress(std::move(f), TciParams{});
  REQUIRE(tt.size() == 1);
  REQUIRE(std::abs(evaluate(tt, {0}) - cplx(-1.0, 0.5)) < 1e-15);
  REQUIRE(std::abs(evaluate(tt, {1}) - cplx(2.0, 1.0)) < 1e-15);
}
