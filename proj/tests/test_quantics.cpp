// Grid/bit-layout bookkeeping checked against brute-force index arithmetic.
#include <catch2/catch_amalgamated.hpp>

#include "qttgp/quantics.hpp"

using namespace qttgp;

TEST_CASE("one-dimensional grid maps indices to coordinates") {
  QuanticsGrid g(1, 5, 3.0);
  REQUIRE(g.sites() == 5);
  REQUIRE(g.points_per_axis() == 32);
  REQUIRE(g.spacing() == Catch::Approx(6.0 / 32.0));

  REQUIRE(g.coord_of({0})[0] == Catch::Approx(-3.0));
  REQUIRE(g.coord_of({16})[0] == Catch::Approx(0.0));
  REQUIRE(g.coord_of({31})[0] == Catch::Approx(3.0 - 6.0 / 32.0));
}

TEST_CASE("bit layout round-trips for every index") {
  QuanticsGrid g(1, 6, 1.0);
  for (std::uint64_t m = 0; m < g.points_per_axis(); ++m) {
    const auto bits = g.bits_of({m});
    REQUIRE(static_cast<int>(bits.size()) == g.sites());
    // site 0 carries the most significant bit
    REQUIRE(bits[0] == static_cast<int>((m >> 5) & 1));
    REQUIRE(bits[5] == static_cast<int>(m & 1));
    REQUIRE(g.index_of(bits)[0] == m);
    REQUIRE(g.index_of_packed(g.packed_of({m}))[0] == m);
  }
}

TEST_CASE("packed convention puts site i at bit i") {
  QuanticsGrid g(1, 4, 1.0);
  const auto bits = g.bits_of({0b1010});  // site order: 1 0 1 0
  std::uint64_t expect = 0;
  for (size_t i = 0; i < bits.size(); ++i) expect |= std::uint64_t(bits[i]) << i;
  REQUIRE(g.packed_of({0b1010}) == expect);
}

TEST_CASE("interleaved two-dimensional layout alternates axes") {
  QuanticsGrid g(2, 4, 2.0);
  REQUIRE(g.sites() == 8);
  for (int s = 0; s < g.sites(); ++s) {
    REQUIRE(g.axis_of(s) == s % 2);
    REQUIRE(g.scale_of(s) == s / 2);
  }
  for (std::uint64_t mx = 0; mx < 16; mx += 5)
    for (std::uint64_t my = 0; my < 16; my += 3) {
      const auto bits = g.bits_of({mx, my});
      const auto back = g.index_of(bits);
      REQUIRE(back[0] == mx);
      REQUIRE(back[1] == my);
      // even sites carry x bits, most significant first
      REQUIRE(bits[0] == static_cast<int>((mx >> 3) & 1));
      REQUIRE(bits[1] == static_cast<int>((my >> 3) & 1));
      REQUIRE(bits[6] == static_cast<int>(mx & 1));
      REQUIRE(bits[7] == static_cast<int>(my & 1));
    }
}

TEST_CASE("serial two-dimensional layout keeps axes contiguous") {
  QuanticsGrid g(2, 3, 1.0, SiteOrdering::serial);
  for (int s = 0; s < g.sites(); ++s) {
    REQUIRE(g.axis_of(s) == s / 3);
    REQUIRE(g.scale_of(s) == s % 3);
  }
  const auto bits = g.bits_of({0b101, 0b011});
  REQUIRE(bits == std::vector<int>{1, 0, 1, 0, 1, 1});
  REQUIRE(g.index_of(bits) == std::vector<std::uint64_t>{0b101, 0b011});
}

TEST_CASE("momentum view reverses per-axis bit significance") {
  QuanticsGrid g(1, 4, 1.0);
  auto k = g.momentum_view();
  REQUIRE(k.reversed);
  // frequency index 1 lives at site 0 in the momentum view
  REQUIRE(k.bits_of({1}) == std::vector<int>{1, 0, 0, 0});
  REQUIRE(g.bits_of({1}) == std::vector<int>{0, 0, 0, 1});
  REQUIRE(k.index_of({1, 0, 0, 0})[0] == 1);

  QuanticsGrid g2(2, 2, 1.0);
  auto k2 = g2.momentum_view();
  // interleaving is unchanged; only in-axis significance flips
  REQUIRE(k2.bits_of({1, 2}) == std::vector<int>{1, 0, 0, 1});
}

TEST_CASE("nearest index rounds and clamps") {
  QuanticsGrid g(1, 4, 2.0);  // spacing 0.25, domain [-2, 2)
  REQUIRE(g.nearest_index({-2.0})[0] == 0);
  REQUIRE(g.nearest_index({0.0})[0] == 8);
  REQUIRE(g.nearest_index({0.13})[0] == 9);   // 0.13/0.25 = 0.52 rounds up
  REQUIRE(g.nearest_index({0.12})[0] == 8);   // 0.48 rounds down
  REQUIRE(g.nearest_index({100.0})[0] == 15); // clamped to the last point
  REQUIRE(g.nearest_index({-100.0})[0] == 0);
}

TEST_CASE("construction validates its arguments") {
  REQUIRE_THROWS_AS(QuanticsGrid(3, 4, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(QuanticsGrid(1, 0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(QuanticsGrid(2, 32, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(QuanticsGrid(1, 4, -1.0), std::invalid_argument);
}
