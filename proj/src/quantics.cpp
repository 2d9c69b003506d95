#include "qttgp/quantics.hpp"

#include <cmath>
#include <stdexcept>

namespace qttgp {

QuanticsGrid::QuanticsGrid(int dim, int bits, double half_width, SiteOrdering ordering)
    : dim(dim), bits(bits), half_width(half_width), ordering(ordering) {
  if (dim < 1 || dim > 2) throw std::invalid_argument("grid: dim must be 1 or 2");
  if (bits < 1 || dim * bits > 62) throw std::invalid_argument("grid: bad bit count");
  if (!(half_width > 0.0)) throw std::invalid_argument("grid: half_width must be > 0");
}

int QuanticsGrid::axis_of(int site) const {
  if (dim == 1) return 0;
  return ordering == SiteOrdering::interleaved ? site % dim : site / bits;
}

int QuanticsGrid::scale_of(int site) const {
  if (dim == 1) return site;
  return ordering == SiteOrdering::interleaved ? site / dim : site % bits;
}

int QuanticsGrid::site_of(int axis, int scale) const {
  if (axis < 0 || axis >= dim || scale < 0 || scale >= bits)
    throw std::invalid_argument("site_of: axis or scale out of range");
  if (dim == 1) return scale;
  return ordering == SiteOrdering::interleaved ? scale * dim + axis
                                               : axis * bits + scale;
}

std::vector<double> QuanticsGrid::coord_of(const std::vector<std::uint64_t>& m) const {
  if (static_cast<int>(m.size()) != dim)
    throw std::invalid_argument("coord_of: wrong index count");
  std::vector<double> x(dim);
  for (int i = 0; i < dim; ++i) {
    if (m[i] >= points_per_axis())
      throw std::invalid_argument("coord_of: index out of range");
    x[i] = -half_width + static_cast<double>(m[i]) * spacing();
  }
  return x;
}

std::vector<int> QuanticsGrid::bits_of(const std::vector<std::uint64_t>& m) const {
  if (static_cast<int>(m.size()) != dim)
    throw std::invalid_argument("bits_of: wrong index count");
  std::vector<int> out(sites());
  for (int s = 0; s < sites(); ++s) {
    const int ax = axis_of(s);
    const int sc = scale_of(s);
    const int shift = reversed ? sc : bits - 1 - sc;
    out[s] = static_cast<int>((m[ax] >> shift) & 1u);
  }
  return out;
}

std::uint64_t QuanticsGrid::packed_of(const std::vector<std::uint64_t>& m) const {
  const auto b = bits_of(m);
  std::uint64_t p = 0;
  for (int s = 0; s < sites(); ++s) p |= std::uint64_t(b[s]) << s;
  return p;
}

std::vector<std::uint64_t> QuanticsGrid::index_of(const std::vector<int>& b) const {
  if (static_cast<int>(b.size()) != sites())
    throw std::invalid_argument("index_of: wrong bit count");
  std::vector<std::uint64_t> m(dim, 0);
  for (int s = 0; s < sites(); ++s) {
    if (b[s] < 0 || b[s] > 1) throw std::invalid_argument("index_of: bit out of range");
    const int ax = axis_of(s);
    const int sc = scale_of(s);
    const int shift = reversed ? sc : bits - 1 - sc;
    m[ax] |= std::uint64_t(b[s]) << shift;
  }
  return m;
}

std::vector<std::uint64_t> QuanticsGrid::index_of_packed(std::uint64_t packed) const {
  std::vector<std::uint64_t> m(dim, 0);
  for (int s = 0; s < sites(); ++s) {
    const int ax = axis_of(s);
    const int sc = scale_of(s);
    const int shift = reversed ? sc : bits - 1 - sc;
    m[ax] |= ((packed >> s) & 1u) << shift;
  }
  return m;
}

std::vector<std::uint64_t> QuanticsGrid::nearest_index(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim)
    throw std::invalid_argument("nearest_index: wrong coordinate count");
  std::vector<std::uint64_t> m(dim);
  const double h = spacing();
  for (int i = 0; i < dim; ++i) {
    double v = std::round((x[i] + half_width) / h);
    v = std::max(v, 0.0);
    v = std::min(v, static_cast<double>(points_per_axis() - 1));
    m[i] = static_cast<std::uint64_t>(v);
  }
  return m;
}

QuanticsGrid QuanticsGrid::momentum_view() const {
  QuanticsGrid g = *this;
  g.reversed = true;
  return g;
}

}  // namespace qttgp
