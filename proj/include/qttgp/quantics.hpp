#pragma once

#include <cstdint>
#include <vector>

#include "qttgp/common.hpp"

namespace qttgp {

enum class SiteOrdering { interleaved, serial };

/// Binary discretization of [-W, W)^dim with 2^bits points per axis:
///     x_i(m) = -W + m * h_r,   h_r = 2 W / 2^bits,   m = 0 .. 2^bits - 1.
/// The right endpoint +W is identified with -W (periodic boundary).
///
/// Site layout: each site carries one bit of one axis.  With interleaved
/// ordering (default for dim 2) the sites run x1 y1 x2 y2 ... with the most
/// significant scales first; serial ordering keeps each axis contiguous.
/// A momentum-view grid (`reversed = true`) carries the bits of each axis in
/// reversed significance — site order unchanged — which is the order in which
/// the Fourier operator emits frequency indices.
struct QuanticsGrid {
  int dim = 1;
  int bits = 10;             ///< R, bits per axis
  double half_width = 1.0;   ///< W
  SiteOrdering ordering = SiteOrdering::interleaved;
  bool reversed = false;     ///< per-axis bit significance reversed (momentum view)

  QuanticsGrid() = default;
  QuanticsGrid(int dim, int bits, double half_width,
               SiteOrdering ordering = SiteOrdering::interleaved);

  int sites() const { return dim * bits; }
  std::uint64_t points_per_axis() const { return std::uint64_t(1) << bits; }
  double spacing() const {
    return 2.0 * half_width / static_cast<double>(points_per_axis());
  }

  /// Axis of site s.
  int axis_of(int site) const;
  /// Scale of site s within its axis; 0 = coarsest (most significant).
  int scale_of(int site) const;
  /// Site carrying the given axis/scale (inverse of axis_of/scale_of).
  int site_of(int axis, int scale) const;

  /// Grid coordinates of per-axis indices m.
  std::vector<double> coord_of(const std::vector<std::uint64_t>& m) const;

  /// Site-ordered bits of per-axis indices m.
  std::vector<int> bits_of(const std::vector<std::uint64_t>& m) const;
  std::uint64_t packed_of(const std::vector<std::uint64_t>& m) const;

  /// Per-axis indices from site-ordered bits (inverse of bits_of).
  std::vector<std::uint64_t> index_of(const std::vector<int>& bits) const;
  std::vector<std::uint64_t> index_of_packed(std::uint64_t packed) const;

  /// Nearest grid index to a coordinate vector (clamped to the domain).
  std::vector<std::uint64_t> nearest_index(const std::vector<double>& x) const;

  /// Same grid read in frequency order (reversed per-axis bit significance).
  QuanticsGrid momentum_view() const;
};

}  // namespace qttgp
