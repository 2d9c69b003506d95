#include "qttgp/gp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qttgp {

namespace {

using RowVector = Eigen::Matrix<cplx, 1, Eigen::Dynamic>;

double per_axis(const std::vector<double>& v, int axis, double fallback) {
  if (axis < static_cast<int>(v.size())) return v[axis];
  return fallback;
}

std::string fmt_tol(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Left-to-right contraction of a train with every prefix product cached, so
// repeated evaluations sharing prefixes (the access pattern of nested-pivot
// sampling) cost one matrix-vector product per fresh site instead of n.
class PrefixEvaluator {
 public:
  explicit PrefixEvaluator(const TensorTrain& tt)
      : tt_(tt), n_(tt.size()), levels_(tt.size()) {}

  cplx operator()(std::uint64_t packed) {
    int depth = n_;
    // deepest cached prefix of `packed`
    while (depth > 0) {
      const std::uint64_t key = packed & mask(depth);
      const auto it = levels_[depth - 1].find(key);
      if (it != levels_[depth - 1].end()) {
        return finish(it->second, packed, depth);
      }
      --depth;
    }
    RowVector v = RowVector::Ones(1);
    return finish(v, packed, 0);
  }

  void clear_if_large(std::size_t max_entries) {
    if (entries_ > max_entries) {
      for (auto& l : levels_) l.clear();
      entries_ = 0;
    }
  }

 private:
  static std::uint64_t mask(int depth) { return (1ull << depth) - 1; }

  cplx finish(RowVector v, std::uint64_t packed, int depth) {
    for (int a = depth; a < n_; ++a) {
      v = v * tt_.cores[a].s[(packed >> a) & 1u];
      if (a + 1 < n_) {  // the full contraction is a scalar, not worth caching
        levels_[a].emplace(packed & mask(a + 1), v);
        ++entries_;
      }
    }
    return v(0);
  }

  const TensorTrain& tt_;
  int n_;
  std::vector<std::unordered_map<std::uint64_t, RowVector>> levels_;
  std::size_t entries_ = 0;
};

// Highest-|psi| index found by random sampling plus greedy bit-flip ascent.
// Used to seed the non-linear sampling when no previous peak is known.
std::uint64_t find_peak_index(const TensorTrain& psi, std::uint64_t rng_seed) {
  const int n = psi.size();
  const std::uint64_t m = (n >= 62) ? ~0ull : ((1ull << n) - 1);
  std::mt19937_64 rng(rng_seed);
  std::uint64_t best = 0;
  double best_abs = std::abs(evaluate_packed(psi, 0));
  for (int k = 0; k < 64; ++k) {
    const std::uint64_t idx = rng() & m;
    const double a = std::abs(evaluate_packed(psi, idx));
    if (a > best_abs) {
      best_abs = a;
      best = idx;
    }
  }
  for (bool improved = true; improved;) {
    improved = false;
    for (int b = 0; b < n; ++b) {
      const std::uint64_t idx = best ^ (1ull << b);
      const double a = std::abs(evaluate_packed(psi, idx));
      if (a > best_abs) {
        best_abs = a;
        best = idx;
        improved = true;
      }
    }
  }
  return best;
}

std::vector<int> unpack_bits(int n, std::uint64_t packed) {
  std::vector<int> bits(n);
  for (int i = 0; i < n; ++i) bits[i] = static_cast<int>((packed >> i) & 1u);
  return bits;
}

// Potential phases and the non-linear factor for one fraction of the step.
TensorTrain apply_potential_and_nl(TensorTrain psi, const TrotterOps& ops,
                                   const EvolutionConfig& cfg, bool half,
                                   std::uint64_t* peak_seed, int* nl_bond) {
  const auto& pots = half ? ops.potential_half : ops.potential_full;
  const TruncationPolicy policy =
      TruncationPolicy::of(cfg.chi_max, cfg.tol_build);
  for (const auto& op : pots) psi = apply_fit(op, psi, psi, policy).tt;
  if (cfg.g != 0.0) {
    GPState mid{std::move(psi), 0.0};
    const double frac_h = half ? ops.h_t / 2 : ops.h_t;
    psi = nonlinear_step(mid, cfg.g, frac_h, cfg.tol_nl, cfg.chi_max,
                         peak_seed);
    if (nl_bond) *nl_bond = std::max(*nl_bond, psi.max_bond());
  }
  return psi;
}

}  // namespace

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------

TensorTrain build_gaussian(const QuanticsGrid& grid, const GaussianSpec& spec,
                           double tol) {
  const int dim = grid.dim;
  for (int ax = 0; ax < static_cast<int>(spec.width.size()); ++ax)
    if (spec.width[ax] <= 0.0)
      throw std::invalid_argument("build_gaussian: width must be positive");

  auto f = [&spec, dim](const std::vector<double>& x) -> cplx {
    double arg = 0.0, phase = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
      const double c = per_axis(spec.center, ax, 0.0);
      const double w = per_axis(spec.width, ax, 1.0);
      const double b = per_axis(spec.boost, ax, 0.0);
      const double d = x[ax] - c;
      arg += d * d / (2.0 * w * w);
      phase += b * x[ax];
    }
    return std::polar(std::exp(-arg), phase);
  };

  // Seeds: the center and one width out along each axis, so sampling starts
  // where the packet actually lives.
  std::vector<std::uint64_t> seeds;
  std::vector<double> c(dim), probe(dim);
  for (int ax = 0; ax < dim; ++ax) c[ax] = per_axis(spec.center, ax, 0.0);
  seeds.push_back(grid.packed_of(grid.nearest_index(c)));
  for (int ax = 0; ax < dim; ++ax) {
    for (const double sgn : {-1.0, 1.0}) {
      probe = c;
      probe[ax] += sgn * per_axis(spec.width, ax, 1.0);
      seeds.push_back(grid.packed_of(grid.nearest_index(probe)));
    }
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  TciParams params;
  params.tol = tol;
  DiagonalBuild d = build_diagonal_tt(grid, f, params, seeds);
  if (!d.converged)
    throw BuildError("initial Gaussian failed to certify at tolerance " +
                     fmt_tol(tol));
  normalize(d.tt);
  return std::move(d.tt);
}

// ---------------------------------------------------------------------------
// Step operators
// ---------------------------------------------------------------------------

TrotterOps build_ops(const EvolutionConfig& cfg) {
  if (cfg.h_t == 0.0)
    throw std::invalid_argument("build_ops: time step must be non-zero");
  if (cfg.chi_max < 1)
    throw std::invalid_argument("build_ops: bond cap must be at least 1");

  TrotterOps ops;
  ops.grid = cfg.grid;
  ops.h_t = cfg.h_t;

  KineticSpec kin = cfg.kinetic;
  kin.h_t = cfg.h_t;
  kin.tol = cfg.tol_build;
  // the cutoff can never exceed the folded band edge of the grid itself
  kin.k_cut = std::min(
      kin.k_cut, static_cast<double>(cfg.grid.points_per_axis() / 2));
  for (int ax = 0; ax < cfg.grid.dim; ++ax)
    ops.kinetic.push_back(build_kinetic_mpo(cfg.grid, kin, ax));

  for (const auto& term : cfg.potential) {
    ops.potential_full.push_back(
        build_potential_mpo(cfg.grid, term, cfg.h_t, cfg.tol_build));
    ops.potential_half.push_back(
        build_potential_mpo(cfg.grid, term, cfg.h_t / 2, cfg.tol_build));
    // |V_term| <= |amplitude| everywhere on the domain for every kind
    // (the scaled harmonic and cross terms peak at the corners at exactly
    // the amplitude, the sine term is bounded by it), so the amplitude
    // bounds the full-step phase.
    ops.max_pot_phase = std::max(
        ops.max_pot_phase, std::abs(cfg.h_t) * std::abs(term.amplitude));
  }
  return ops;
}

TrotterOps conjugate_ops(const TrotterOps& ops) {
  TrotterOps out;
  out.grid = ops.grid;
  out.h_t = -ops.h_t;
  out.max_pot_phase = ops.max_pot_phase;
  for (const auto& k : ops.kinetic) out.kinetic.push_back(adjoint(k));
  for (const auto& p : ops.potential_full)
    out.potential_full.push_back(adjoint(p));
  for (const auto& p : ops.potential_half)
    out.potential_half.push_back(adjoint(p));
  return out;
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

TensorTrain nonlinear_step(const GPState& state, double g, double h_t,
                           double tol_nl, int max_rank,
                           std::uint64_t* peak_seed) {
  if (g == 0.0) return state.psi;

  const int n = state.psi.size();
  auto eval = std::make_shared<PrefixEvaluator>(state.psi);
  const double gh = g * h_t;
  FunctionOracle oracle(n, [eval, gh](const std::vector<int>& bits) {
    std::uint64_t packed = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
      packed |= std::uint64_t(bits[i]) << i;
    const cplx a = (*eval)(packed);
    const double d = std::norm(a);
    eval->clear_if_large(std::size_t(1) << 16);
    return std::polar(1.0, -gh * d) * a;
  });

  std::uint64_t seed = (peak_seed && *peak_seed != ~0ull)
                           ? *peak_seed
                           : find_peak_index(state.psi, 0x9e3779b9ull);
  std::vector<std::vector<int>> seeds = {unpack_bits(n, seed)};

  TciParams params;
  params.tol = tol_nl;
  params.max_rank = max_rank;
  CrossInterpolation ci = tci_build(std::move(oracle), params, seeds);
  // A build that stops because the bond cap binds is deliberate lossy
  // truncation (small-cap runs depend on it); failing to certify *below*
  // the cap means the sampling itself went wrong.
  const std::vector<int> rk = ci.ranks();
  const int top = rk.empty() ? 0 : *std::max_element(rk.begin(), rk.end());
  if (!ci.converged() && top < max_rank)
    throw BuildError("non-linear factor failed to certify at tolerance " +
                     fmt_tol(tol_nl) + " (reached bond " + std::to_string(top) +
                     " of cap " + std::to_string(max_rank) + ")");
  if (peak_seed) *peak_seed = ci.max_abs_pivot();
  return ci.tt();
}

GPState trotter_step(const GPState& state, const TrotterOps& ops,
                     const EvolutionConfig& cfg, StepEdge edge,
                     ObservableRecord* record, std::uint64_t* peak_seed) {
  const TruncationPolicy policy =
      TruncationPolicy::of(cfg.chi_max, cfg.tol_build);
  int nl_bond = 0;

  TensorTrain psi = state.psi;
  if (edge.first)
    psi = apply_potential_and_nl(std::move(psi), ops, cfg, /*half=*/true,
                                 peak_seed, &nl_bond);

  for (const auto& kin : ops.kinetic) {
    FitResult fit = apply_fit(kin, psi, psi, policy);
    psi = std::move(fit.tt);
  }

  // Interior steps absorb the closing half-step of this step and the opening
  // half-step of the next into one full application; only the last step
  // closes with a true half.
  psi = apply_potential_and_nl(std::move(psi), ops, cfg, /*half=*/edge.last,
                               peak_seed, &nl_bond);

  const double pre_norm = normalize(psi);
  const double drift = std::abs(1.0 - pre_norm);
  const double t_next = state.t + ops.h_t;
  if (!(drift <= 0.1))
    throw IntegrationError(
        "norm drifted by " + std::to_string(drift) +
            " in one step (check the momentum cutoff and the time step)",
        state.t);

  if (record) {
    record->t = t_next;
    record->norm_before_renorm = pre_norm;
    record->max_bond = psi.max_bond();
    record->nl_max_bond = nl_bond;
  }
  return GPState{std::move(psi), t_next};
}

static std::pair<GPState, std::vector<ObservableRecord>> evolve_with_ops(
    const TensorTrain& psi0, const EvolutionConfig& cfg,
    const TrotterOps& ops, int n_steps) {
  GPState state{psi0, 0.0};
  normalize(state.psi);
  std::vector<ObservableRecord> records;
  const int stride = std::max(1, cfg.record_every);
  std::uint64_t peak = ~0ull;  // resolved on first non-linear solve

  for (int k = 0; k < n_steps; ++k) {
    const StepEdge edge{k == 0, k == n_steps - 1};
    const bool keep = ((k + 1) % stride == 0) || k == n_steps - 1;
    ObservableRecord rec;
    state = trotter_step(state, ops, cfg, edge, keep ? &rec : nullptr, &peak);
    if (keep) {
      const Moments mx = measure_moments(state.psi, cfg.grid, 0);
      rec.mean_x = mx.mean;
      rec.width_x = mx.width;
      if (cfg.grid.dim > 1) {
        const Moments my = measure_moments(state.psi, cfg.grid, 1);
        rec.mean_y = my.mean;
        rec.width_y = my.width;
      }
      records.push_back(rec);
    }
  }
  return {std::move(state), std::move(records)};
}

static int validated_step_count(const EvolutionConfig& cfg) {
  if (cfg.h_t == 0.0)
    throw std::invalid_argument("evolve: time step must be non-zero");
  if (cfg.T < 0.0)
    throw std::invalid_argument("evolve: total time must be non-negative");
  const double ratio = cfg.T / std::abs(cfg.h_t);
  const long long n = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(
        "evolve: total time is not a whole number of steps");
  return static_cast<int>(n);
}

std::pair<GPState, std::vector<ObservableRecord>> evolve(
    const TensorTrain& psi0, const EvolutionConfig& cfg) {
  const int n = validated_step_count(cfg);
  if (n == 0) return {GPState{psi0, 0.0}, {}};
  const TrotterOps ops = build_ops(cfg);
  return evolve_with_ops(psi0, cfg, ops, n);
}

double forward_backward_error(const TensorTrain& psi0,
                              const EvolutionConfig& cfg) {
  const int n = validated_step_count(cfg);
  if (n == 0) return 0.0;
  const TrotterOps fwd = build_ops(cfg);
  const GPState there = evolve_with_ops(psi0, cfg, fwd, n).first;

  const TrotterOps bwd = conjugate_ops(fwd);
  EvolutionConfig back = cfg;
  back.h_t = -cfg.h_t;
  const GPState round = evolve_with_ops(there.psi, back, bwd, n).first;

  TensorTrain ref = psi0;
  normalize(ref);
  const double overlap = std::abs(inner(round.psi, ref));
  return std::max(0.0, 1.0 - overlap * overlap);
}

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

Moments measure_moments(const TensorTrain& psi, const QuanticsGrid& grid,
                        int axis) {
  const TruncationPolicy policy = TruncationPolicy::by_tol(1e-14);
  const double n2 = inner(psi, psi).real();
  if (!(n2 > 0.0))
    throw std::invalid_argument("measure_moments: state has zero norm");
  const TensorTrain x1 = build_coordinate_tt(grid, axis, 1);
  const TensorTrain x2 = build_coordinate_tt(grid, axis, 2);
  const double m1 = inner(psi, hadamard_apply(x1, psi, policy)).real() / n2;
  const double m2 = inner(psi, hadamard_apply(x2, psi, policy)).real() / n2;
  const double var = m2 - m1 * m1;
  if (var < -1e-10)
    throw IntegrationError("variance came out negative (" +
                           std::to_string(var) +
                           "): inconsistent state or grid");
  return Moments{m1, std::sqrt(std::max(0.0, var))};
}

std::vector<DensitySample> sample_density(const TensorTrain& psi,
                                          const QuanticsGrid& grid,
                                          const std::vector<double>& lo,
                                          const std::vector<double>& hi,
                                          int n_per_axis) {
  const int dim = grid.dim;
  if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
    throw std::invalid_argument("sample_density: window arity mismatch");
  if (n_per_axis < 1)
    throw std::invalid_argument("sample_density: need at least one point");
  const double w = grid.half_width;
  for (int ax = 0; ax < dim; ++ax) {
    if (!(lo[ax] < hi[ax]))
      throw std::invalid_argument("sample_density: empty window");
    if (lo[ax] < -w || hi[ax] > w)
      throw std::invalid_argument("sample_density: window leaves the domain");
  }

  std::vector<DensitySample> out;
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim);
  const long long total = [&] {
    long long t = 1;
    for (int ax = 0; ax < dim; ++ax) t *= n_per_axis;
    return t;
  }();
  out.reserve(static_cast<std::size_t>(total));

  for (long long flat = 0; flat < total; ++flat) {
    long long rem = flat;
    for (int ax = 0; ax < dim; ++ax) {
      const int i = static_cast<int>(rem % n_per_axis);
      rem /= n_per_axis;
      x[ax] = (n_per_axis == 1)
                  ? 0.5 * (lo[ax] + hi[ax])
                  : lo[ax] + (hi[ax] - lo[ax]) * i / (n_per_axis - 1);
    }
    const std::vector<std::uint64_t> m = grid.nearest_index(x);
    const cplx a = evaluate(psi, grid.bits_of(m));
    out.push_back(DensitySample{grid.coord_of(m), std::norm(a)});
  }
  return out;
}

}  // namespace qttgp
