#include "qttgp/evolution_ops.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

namespace qttgp {
namespace {

constexpr double kPi = std::numbers::pi;

bool transforms(int axis, int ax) { return axis < 0 || axis == ax; }

TrainCore const_site(cplx v00, cplx v01, cplx v10, cplx v11) {
  TrainCore c(4, 1, 1);
  c.s[0](0, 0) = v00;
  c.s[1](0, 0) = v01;
  c.s[2](0, 0) = v10;
  c.s[3](0, 0) = v11;
  return c;
}

/// Identity of the entrywise product: every slice is one.
TrainCore ones_site() { return const_site(1, 1, 1, 1); }

/// Identity as an operator: delta(out == in).
TrainCore delta_site() { return const_site(1, 0, 0, 1); }

/// Rank-1 factor with, on every transformed-axis site, the normalization and
/// the equal-scale phase (-1)^{out in} / sqrt(2); sites of axes left out are
/// the operator identity instead, so the finished train leaves them alone.
TensorTrainOperator qft_base(const QuanticsGrid& grid, int axis) {
  const double r = 1.0 / std::sqrt(2.0);
  TensorTrainOperator out;
  out.cores.reserve(grid.sites());
  for (int s = 0; s < grid.sites(); ++s)
    out.cores.push_back(transforms(axis, grid.axis_of(s))
                            ? const_site(r, r, r, -r)
                            : delta_site());
  return out;
}

/// Bond-2 factor with the cross-scale phases tied to output bit `a` of axis
/// `ax`: exp(-2 pi i out_a in_b 2^{a-b-1}) for every same-axis scale b > a.
/// Sites outside the span multiply by one; sites of other axes inside the
/// span pass the bond channel through untouched.
TensorTrainOperator qft_ladder(const QuanticsGrid& grid, int ax, int a) {
  const int first = grid.site_of(ax, a);
  const int last = grid.site_of(ax, grid.bits - 1);
  TensorTrainOperator out;
  out.cores.reserve(grid.sites());
  for (int s = 0; s < grid.sites(); ++s) {
    if (s < first || s > last) {
      out.cores.push_back(ones_site());
      continue;
    }
    if (s == first) {
      // Select the bond channel by the output bit; the input bit is idle.
      TrainCore c(4, 1, 2);
      for (int in = 0; in < 2; ++in) {
        c.s[0 * 2 + in](0, 0) = 1.0;
        c.s[1 * 2 + in](0, 1) = 1.0;
      }
      out.cores.push_back(std::move(c));
      continue;
    }
    if (grid.axis_of(s) != ax) {
      TrainCore c(4, 2, 2);
      for (int p = 0; p < 4; ++p) c.s[p] = Matrix::Identity(2, 2);
      out.cores.push_back(std::move(c));
      continue;
    }
    const int b = grid.scale_of(s);
    const cplx w = std::polar(1.0, -2.0 * kPi * std::ldexp(1.0, a - b - 1));
    if (s < last) {
      TrainCore c(4, 2, 2);
      for (int o = 0; o < 2; ++o)
        for (int in = 0; in < 2; ++in) {
          c.s[o * 2 + in](0, 0) = 1.0;
          c.s[o * 2 + in](1, 1) = in ? w : 1.0;
        }
      out.cores.push_back(std::move(c));
    } else {
      TrainCore c(4, 2, 1);
      for (int o = 0; o < 2; ++o)
        for (int in = 0; in < 2; ++in) {
          c.s[o * 2 + in](0, 0) = 1.0;
          c.s[o * 2 + in](1, 0) = in ? w : 1.0;
        }
      out.cores.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<std::vector<int>> unpack_seeds(
    int n, const std::vector<std::uint64_t>& seeds) {
  std::vector<std::vector<int>> out;
  out.reserve(seeds.size());
  for (std::uint64_t p : seeds) {
    std::vector<int> bits(n);
    for (int s = 0; s < n; ++s) bits[s] = static_cast<int>((p >> s) & 1);
    out.push_back(std::move(bits));
  }
  return out;
}

/// 1 / (1 + e^z) without overflow on either side.
double logistic_neg(double z) {
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

/// Starting pivots for frequency diagonals: the window is ~1 near k = 0 and
/// ~0 over most of the grid, so make sure the transition ring around k_cut
/// is represented from the first sweep on every axis.
std::vector<std::uint64_t> kinetic_seeds(const QuanticsGrid& kview,
                                         const KineticSpec& spec) {
  const std::uint64_t count = kview.points_per_axis();
  auto near = [&](double v) -> std::uint64_t {
    const double r = std::nearbyint(std::clamp(v, 0.0, double(count - 1)));
    return static_cast<std::uint64_t>(r);
  };
  std::vector<std::uint64_t> per_axis = {0, near(spec.k_cut / 2),
                                         near(spec.k_cut), near(2 * spec.k_cut),
                                         (count - near(spec.k_cut)) % count};
  std::sort(per_axis.begin(), per_axis.end());
  per_axis.erase(std::unique(per_axis.begin(), per_axis.end()),
                 per_axis.end());
  std::vector<std::uint64_t> seeds;
  if (kview.dim == 1) {
    for (std::uint64_t v : per_axis) seeds.push_back(kview.packed_of({v}));
  } else {
    for (std::uint64_t v0 : per_axis)
      for (std::uint64_t v1 : per_axis)
        seeds.push_back(kview.packed_of({v0, v1}));
  }
  return seeds;
}

void check_axis(const QuanticsGrid& grid, int axis, const char* what) {
  if (axis < -1 || axis >= grid.dim)
    throw BuildError(std::string(what) + ": axis " + std::to_string(axis) +
                     " out of range for dimension " + std::to_string(grid.dim));
}

void check_kinetic_spec(const QuanticsGrid& grid, const KineticSpec& spec,
                        const char* what) {
  const double half = std::ldexp(1.0, grid.bits - 1);
  if (!(spec.mass > 0.0) || !(spec.beta > 0.0) || !(spec.tol > 0.0) ||
      !(spec.k_cut >= 1.0) || spec.k_cut > half)
    throw BuildError(std::string(what) +
                     ": need mass > 0, beta > 0, tol > 0 and 1 <= k_cut <= " +
                     std::to_string(half));
}

TciParams kinetic_params(const KineticSpec& spec) {
  TciParams p;
  p.tol = spec.tol;
  return p;
}

}  // namespace

TensorTrainOperator build_qft_mpo(const QuanticsGrid& grid, bool inverse,
                                  int axis, const TruncationPolicy& policy) {
  check_axis(grid, axis, "Fourier operator");
  TensorTrainOperator f = qft_base(grid, axis);
  for (int ax = 0; ax < grid.dim; ++ax) {
    if (!transforms(axis, ax)) continue;
    for (int a = 0; a + 1 < grid.bits; ++a)
      f = hadamard_product(f, qft_ladder(grid, ax, a), policy);
  }
  return inverse ? adjoint(f) : f;
}

TensorTrainOperator build_qft_mpo(int bits, bool inverse) {
  return build_qft_mpo(QuanticsGrid(1, bits, 1.0), inverse);
}

DiagonalBuild build_index_diagonal_tt(
    const QuanticsGrid& grid,
    const std::function<cplx(const std::vector<std::uint64_t>&)>& f,
    const TciParams& params, const std::vector<std::uint64_t>& seeds) {
  FunctionOracle oracle(grid.sites(),
                        [grid, f](const std::vector<int>& bits) {
                          return f(grid.index_of(bits));
                        });
  CrossInterpolation ci = tci_build(std::move(oracle), params,
                                    unpack_seeds(grid.sites(), seeds));
  DiagonalBuild out;
  out.tt = ci.tt();
  out.converged = ci.converged();
  out.max_abs_value = ci.oracle().max_abs();
  const std::vector<int> r = ci.ranks();
  out.max_bond = r.empty() ? 1 : *std::max_element(r.begin(), r.end());
  return out;
}

DiagonalBuild build_diagonal_tt(
    const QuanticsGrid& grid,
    const std::function<cplx(const std::vector<double>&)>& f,
    const TciParams& params, const std::vector<std::uint64_t>& seeds) {
  return build_index_diagonal_tt(
      grid,
      [grid, f](const std::vector<std::uint64_t>& m) {
        return f(grid.coord_of(m));
      },
      params, seeds);
}

double kinetic_energy(const QuanticsGrid& grid, const KineticSpec& spec,
                      const std::vector<std::uint64_t>& k, int axis) {
  const double count = static_cast<double>(grid.points_per_axis());
  const double h = grid.spacing();
  const double pref = 2.0 / (spec.mass * h * h);
  double e = 0.0;
  for (int ax = 0; ax < grid.dim; ++ax) {
    if (!transforms(axis, ax)) continue;
    const double s = std::sin(kPi * static_cast<double>(k[ax]) / count);
    e += pref * s * s;
  }
  return e;
}

double lowpass_window(const QuanticsGrid& grid, const KineticSpec& spec,
                      const std::vector<std::uint64_t>& k, int axis) {
  if (!spec.low_pass) return 1.0;
  const double count = static_cast<double>(grid.points_per_axis());
  double w = 1.0;
  for (int ax = 0; ax < grid.dim; ++ax) {
    if (!transforms(axis, ax)) continue;
    const double kd = static_cast<double>(k[ax]);
    const double folded = std::min(kd, count - kd);
    w *= logistic_neg(spec.beta * (folded - spec.k_cut));
  }
  return w;
}

TensorTrain build_kinetic_phase(const QuanticsGrid& grid,
                                const KineticSpec& spec, int axis) {
  check_axis(grid, axis, "kinetic phase");
  check_kinetic_spec(grid, spec, "kinetic phase");
  const QuanticsGrid kview = grid.momentum_view();
  auto f = [grid, spec, axis](const std::vector<std::uint64_t>& k) -> cplx {
    return std::polar(1.0, -spec.h_t * kinetic_energy(grid, spec, k, axis));
  };
  DiagonalBuild d = build_index_diagonal_tt(kview, f, kinetic_params(spec),
                                            kinetic_seeds(kview, spec));
  if (!d.converged)
    throw BuildError("kinetic phase failed to certify at tolerance " +
                     std::to_string(spec.tol) +
                     " (|h_t T(k)| likely too large; window it instead)");
  return std::move(d.tt);
}

TensorTrain build_lowpass(const QuanticsGrid& grid, const KineticSpec& spec,
                          int axis) {
  check_axis(grid, axis, "low-pass window");
  check_kinetic_spec(grid, spec, "low-pass window");
  const QuanticsGrid kview = grid.momentum_view();
  auto f = [grid, spec, axis](const std::vector<std::uint64_t>& k) -> cplx {
    return lowpass_window(grid, spec, k, axis);
  };
  DiagonalBuild d = build_index_diagonal_tt(kview, f, kinetic_params(spec),
                                            kinetic_seeds(kview, spec));
  if (!d.converged)
    throw BuildError("low-pass window failed to certify at tolerance " +
                     std::to_string(spec.tol));
  return std::move(d.tt);
}

DiagonalBuild build_filtered_kinetic_phase(const QuanticsGrid& grid,
                                           const KineticSpec& spec, int axis) {
  check_axis(grid, axis, "kinetic factor");
  check_kinetic_spec(grid, spec, "kinetic factor");
  const QuanticsGrid kview = grid.momentum_view();
  auto f = [grid, spec, axis](const std::vector<std::uint64_t>& k) -> cplx {
    const double w = lowpass_window(grid, spec, k, axis);
    if (w == 0.0) return 0.0;
    return w * std::polar(1.0, -spec.h_t * kinetic_energy(grid, spec, k, axis));
  };
  return build_index_diagonal_tt(kview, f, kinetic_params(spec),
                                 kinetic_seeds(kview, spec));
}

TensorTrainOperator build_kinetic_mpo(const QuanticsGrid& grid,
                                      const KineticSpec& spec, int axis,
                                      int max_bond_cap) {
  // The windowed diagonal theta(k) exp(-i h_t T(k)) is sampled as one
  // function: materializing the bare phase first would need enormous ranks
  // wherever |h_t T| >> 1, precisely the region the window zeroes out.
  const DiagonalBuild d = build_filtered_kinetic_phase(grid, spec, axis);
  if (!d.converged)
    throw BuildError("kinetic propagator: frequency diagonal failed to "
                     "certify at tolerance " + std::to_string(spec.tol));
  const TruncationPolicy pol = TruncationPolicy::by_tol(spec.tol);
  const TensorTrainOperator f = build_qft_mpo(grid, false, axis);
  const TensorTrainOperator u =
      mpo_multiply(adjoint(f), mpo_multiply(diag_to_mpo(d.tt), f, pol), pol);
  const int mb = max_bond(u);
  if (mb > max_bond_cap)
    throw BuildError("kinetic propagator bond " + std::to_string(mb) +
                     " exceeds the cap " + std::to_string(max_bond_cap) +
                     "; raise the tolerance or lower k_cut");
  return u;
}

double calibrate_kcut(const QuanticsGrid& grid, KineticSpec spec,
                      const TensorTrain& trial, double norm_tol) {
  const double half = std::ldexp(1.0, grid.bits - 1);
  const double base = norm(trial);
  if (!(base > 0.0))
    throw CalibrationError("cutoff calibration needs a non-null trial state");
  spec.low_pass = true;
  double kc = std::min(256.0, half);
  for (;;) {
    spec.k_cut = kc;
    TensorTrainOperator u;
    try {
      u = build_kinetic_mpo(grid, spec, -1, 256);
    } catch (const BuildError& err) {
      throw CalibrationError(std::string("cutoff calibration: ") + err.what());
    }
    const TensorTrain phi =
        apply_naive(u, trial, TruncationPolicy::by_tol(1e-10));
    const double drift = std::abs(1.0 - norm(phi) / base);
    if (drift < norm_tol) return kc;
    if (kc >= half)
      throw CalibrationError(
          "no acceptable momentum cutoff up to half the grid (norm drift " +
          std::to_string(drift) + ")");
    kc = std::min(2.0 * kc, half);
  }
}

double eval_potential_term(const PotentialTerm& term, double half_width,
                           const std::vector<double>& x) {
  switch (term.kind) {
    case PotentialKind::harmonic_x: {
      const double u = x[0] / half_width;
      return term.amplitude * u * u;
    }
    case PotentialKind::harmonic_y: {
      const double u = (x.size() > 1 ? x[1] : 0.0) / half_width;
      return term.amplitude * u * u;
    }
    case PotentialKind::cross_xy: {
      const double y = x.size() > 1 ? x[1] : 0.0;
      return term.amplitude * x[0] * y / (half_width * half_width);
    }
    case PotentialKind::sine_mod: {
      double phase = 0.0;
      const std::size_t m = std::min(term.wave_vector.size(), x.size());
      for (std::size_t i = 0; i < m; ++i) phase += term.wave_vector[i] * x[i];
      const double s = std::sin(phase);
      return term.amplitude * s * s;
    }
  }
  return 0.0;
}

double eval_potential(const std::vector<PotentialTerm>& terms,
                      double half_width, const std::vector<double>& x) {
  double v = 0.0;
  for (const PotentialTerm& t : terms) v += eval_potential_term(t, half_width, x);
  return v;
}

namespace {

void check_potential_term(const QuanticsGrid& grid, const PotentialTerm& term) {
  if ((term.kind == PotentialKind::harmonic_y ||
       term.kind == PotentialKind::cross_xy) &&
      grid.dim < 2)
    throw BuildError("potential term needs a second dimension");
  if (term.kind == PotentialKind::sine_mod) {
    double q2 = 0.0;
    for (double q : term.wave_vector) q2 += q * q;
    if (!(q2 > 0.0))
      throw BuildError("sinusoidal potential term needs a non-zero wave vector");
  }
}

}  // namespace

DiagonalBuild build_potential_phase(const QuanticsGrid& grid,
                                    const PotentialTerm& term, double h_t,
                                    const TciParams& params) {
  check_potential_term(grid, term);
  const double w = grid.half_width;
  auto max_arg = std::make_shared<double>(0.0);
  auto f = [term, w, h_t, max_arg](const std::vector<double>& x) -> cplx {
    const double a = h_t * eval_potential_term(term, w, x);
    *max_arg = std::max(*max_arg, std::abs(a));
    return std::polar(1.0, -a);
  };
  // Seed at the domain center: the potential minimum for the traps we model.
  const std::vector<std::uint64_t> seeds = {
      grid.packed_of(grid.nearest_index(std::vector<double>(grid.dim, 0.0)))};
  DiagonalBuild out = build_diagonal_tt(grid, f, params, seeds);
  out.max_abs_value = *max_arg;
  return out;
}

TensorTrainOperator build_potential_mpo(const QuanticsGrid& grid,
                                        const PotentialTerm& term, double h_t,
                                        double tol, int max_rank) {
  TciParams params;
  params.tol = tol;
  params.max_rank = max_rank;
  DiagonalBuild d = build_potential_phase(grid, term, h_t, params);
  if (!d.converged)
    throw BuildError("potential factor failed to certify at tolerance " +
                     std::to_string(tol) + " within bond " +
                     std::to_string(max_rank));
  if (d.max_abs_value > 1.0)
    std::cerr << "warning: |V(x) h_t| reaches " << d.max_abs_value
              << " (> 1); the phase field compresses poorly -- "
                 "consider a smaller time step\n";
  return diag_to_mpo(d.tt);
}

TensorTrain build_coordinate_tt(const QuanticsGrid& grid, int axis,
                                int power) {
  if (axis < 0 || axis >= grid.dim)
    throw BuildError("coordinate train: axis " + std::to_string(axis) +
                     " out of range for dimension " + std::to_string(grid.dim));
  if (power != 1 && power != 2)
    throw BuildError("coordinate train: power must be 1 or 2");
  if (grid.reversed)
    throw BuildError("coordinate train: expects a coordinate-ordered grid");

  const int n = grid.sites();
  const double w = grid.half_width;
  const double h = grid.spacing();
  const auto a_of = [&](int s, int sigma) -> double {
    if (grid.axis_of(s) != axis || sigma == 0) return 0.0;
    return h * std::ldexp(1.0, grid.bits - 1 - grid.scale_of(s));
  };

  TensorTrain out;
  out.cores.reserve(n);
  if (n == 1) {
    TrainCore c(2, 1, 1);
    for (int sigma = 0; sigma < 2; ++sigma)
      c.s[sigma](0, 0) = std::pow(a_of(0, sigma) - w, power);
    out.cores.push_back(std::move(c));
    return out;
  }

  if (power == 1) {
    // Bond state (running sum, 1); the -W offset rides on the first site.
    TrainCore head(2, 1, 2);
    for (int sigma = 0; sigma < 2; ++sigma) {
      head.s[sigma](0, 0) = a_of(0, sigma) - w;
      head.s[sigma](0, 1) = 1.0;
    }
    out.cores.push_back(std::move(head));
    for (int s = 1; s + 1 < n; ++s) {
      TrainCore c(2, 2, 2);
      for (int sigma = 0; sigma < 2; ++sigma) {
        c.s[sigma](0, 0) = 1.0;
        c.s[sigma](1, 0) = a_of(s, sigma);
        c.s[sigma](1, 1) = 1.0;
      }
      out.cores.push_back(std::move(c));
    }
    TrainCore tail(2, 2, 1);
    for (int sigma = 0; sigma < 2; ++sigma) {
      tail.s[sigma](0, 0) = 1.0;
      tail.s[sigma](1, 0) = a_of(n - 1, sigma);
    }
    out.cores.push_back(std::move(tail));
    return out;
  }

  // power == 2: bond state (sum^2, sum, 1).
  TrainCore head(2, 1, 3);
  for (int sigma = 0; sigma < 2; ++sigma) {
    const double a = a_of(0, sigma) - w;
    head.s[sigma](0, 0) = a * a;
    head.s[sigma](0, 1) = a;
    head.s[sigma](0, 2) = 1.0;
  }
  out.cores.push_back(std::move(head));
  for (int s = 1; s + 1 < n; ++s) {
    TrainCore c(2, 3, 3);
    for (int sigma = 0; sigma < 2; ++sigma) {
      const double a = a_of(s, sigma);
      c.s[sigma](0, 0) = 1.0;
      c.s[sigma](1, 0) = 2.0 * a;
      c.s[sigma](1, 1) = 1.0;
      c.s[sigma](2, 0) = a * a;
      c.s[sigma](2, 1) = a;
      c.s[sigma](2, 2) = 1.0;
    }
    out.cores.push_back(std::move(c));
  }
  TrainCore tail(2, 3, 1);
  for (int sigma = 0; sigma < 2; ++sigma) {
    const double a = a_of(n - 1, sigma);
    tail.s[sigma](0, 0) = 1.0;
    tail.s[sigma](1, 0) = 2.0 * a;
    tail.s[sigma](2, 0) = a * a;
  }
  out.cores.push_back(std::move(tail));
  return out;
}

}  // namespace qttgp
