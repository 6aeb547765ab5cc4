#pragma once

// Characteristic functions and integrals of them over the max-norm cube
// |t| <= 1/tau. The concentration ball is Euclidean; the integration cube is
// not. That asymmetry is intended.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "anticonc/core.hpp"

namespace anticonc {

using Complex = std::complex<double>;

inline Complex cf_X(const DiscreteDist1D& f, double s) {
  Complex acc{0.0, 0.0};
  for (std::size_t j = 0; j < f.size(); ++j) {
    double x = s * f.atoms()[j];
    acc += f.masses()[j] * Complex(std::cos(x), std::sin(x));
  }
  return acc;
}

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// cf of S_a: product over k of cf_X(<t, a_k>).
inline Complex cf_Fa(const WeightMatrix& a, const DiscreteDist1D& f,
                     std::span<const double> t) {
  if (t.size() != a.d()) throw DomainError("t and weights differ in dimension");
  Complex prod{1.0, 0.0};
  for (std::size_t k = 0; k < a.n(); ++k) prod *= cf_X(f, dot(t, a.row(k)));
  return prod;
}

// cf of H_z^lambda: exp(-(lambda / 2) sum_k (1 - cos(<t, a_k> z))).
inline double cf_H(const WeightMatrix& a, double z, double lambda_exp,
                   std::span<const double> t) {
  if (std::isnan(lambda_exp) || lambda_exp < 0.0) {
    throw DomainError("lambda_exp must be >= 0");
  }
  if (t.size() != a.d()) throw DomainError("t and weights differ in dimension");
  if (lambda_exp == 0.0 || z == 0.0) return 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.n(); ++k) s += 1.0 - std::cos(dot(t, a.row(k)) * z);
  return std::exp(-0.5 * lambda_exp * s);
}

// A characteristic function together with what the quadrature needs to know
// about it: an effective bandwidth per axis (for node counts) and, when the
// function is periodic along each axis, the generating frequencies.
struct CfHandle {
  std::size_t dim = 1;
  std::function<Complex(std::span<const double>)> eval;
  bool symmetric_nonneg = false;
  std::vector<double> bandwidth;  // per axis, rad per unit t
  // Per axis: f is periodic with period 2 pi / gcd(freqs). Empty axis list
  // means constant along that axis. nullopt means not known to be periodic.
  std::optional<std::vector<std::vector<double>>> axis_freqs;
  std::size_t node_floor = 0;
};

namespace detail {

// Largest g such that every v / g is an integer <= max_multiple (relative
// tolerance 1e-9). v must be positive.
inline std::optional<double> real_gcd(std::span<const double> values,
                                      int max_multiple = 4096) {
  if (values.empty()) return std::nullopt;
  double smallest = *std::min_element(values.begin(), values.end());
  for (int q = 1; q <= max_multiple; ++q) {
    double g = smallest / q;
    bool ok = true;
    for (double v : values) {
      double r = v / g;
      if (r > max_multiple + 0.5 || std::abs(r - std::round(r)) > 1e-9 * r) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
  return std::nullopt;
}

inline double effective_bandwidth(std::span<const double> omegas, double spread) {
  double mx = 0.0, sq = 0.0;
  for (double w : omegas) {
    mx = std::max(mx, w);
    sq += w * w;
  }
  return 2.0 * mx + 3.0 * std::sqrt(spread * sq);
}

}  // namespace detail

inline CfHandle cf_handle_constant(std::size_t dim) {
  CfHandle h;
  h.dim = dim;
  h.eval = [](std::span<const double>) { return Complex{1.0, 0.0}; };
  h.symmetric_nonneg = true;
  h.bandwidth.assign(dim, 0.0);
  h.axis_freqs = std::vector<std::vector<double>>(dim);
  return h;
}

// Set symmetric_nonneg only when the caller knows cf_X >= 0 (e.g. X is itself
// a symmetrized law); it is not detected.
inline CfHandle cf_handle_Fa(const WeightMatrix& a, const DiscreteDist1D& f,
                             bool symmetric_nonneg = false) {
  CfHandle h;
  h.dim = a.d();
  h.eval = [a, f](std::span<const double> t) { return cf_Fa(a, f, t); };
  h.symmetric_nonneg = symmetric_nonneg;
  double span = f.atoms().back() - f.atoms().front();

  std::optional<double> lattice;
  if (f.size() >= 2) {
    std::vector<double> diffs;
    for (std::size_t j = 1; j < f.size(); ++j) diffs.push_back(f.atoms()[j] - f.atoms()[0]);
    lattice = detail::real_gcd(diffs);
  }
  std::vector<std::vector<double>> freqs(h.dim);
  h.bandwidth.assign(h.dim, 0.0);
  for (std::size_t i = 0; i < h.dim; ++i) {
    std::vector<double> omegas;
    for (std::size_t k = 0; k < a.n(); ++k) {
      double w = std::abs(a(k, i));
      if (w == 0.0 || span == 0.0) continue;
      omegas.push_back(w * span);
      if (lattice) freqs[i].push_back(w * *lattice);
    }
    h.bandwidth[i] = detail::effective_bandwidth(omegas, 1.0);
  }
  if (f.size() < 2 || lattice) h.axis_freqs = std::move(freqs);
  h.node_floor = 64 * a.n() + 1;
  return h;
}

inline CfHandle cf_handle_H(const WeightMatrix& a, double z, double lambda_exp) {
  if (std::isnan(lambda_exp) || lambda_exp < 0.0) {
    throw DomainError("lambda_exp must be >= 0");
  }
  CfHandle h;
  h.dim = a.d();
  h.eval = [a, z, lambda_exp](std::span<const double> t) {
    return Complex{cf_H(a, z, lambda_exp, t), 0.0};
  };
  h.symmetric_nonneg = true;
  std::vector<std::vector<double>> freqs(h.dim);
  h.bandwidth.assign(h.dim, 0.0);
  const bool constant = lambda_exp == 0.0 || z == 0.0;
  for (std::size_t i = 0; i < h.dim; ++i) {
    if (constant) continue;
    for (std::size_t k = 0; k < a.n(); ++k) {
      double w = std::abs(a(k, i) * z);
      if (w != 0.0) freqs[i].push_back(w);
    }
    h.bandwidth[i] = detail::effective_bandwidth(freqs[i], std::max(0.5, lambda_exp / 2.0));
  }
  h.axis_freqs = std::move(freqs);
  return h;
}

inline CfHandle cf_handle(std::size_t dim, std::function<Complex(std::span<const double>)> fn,
                          bool symmetric_nonneg, std::vector<double> bandwidth = {}) {
  CfHandle h;
  h.dim = dim;
  h.eval = std::move(fn);
  h.symmetric_nonneg = symmetric_nonneg;
  h.bandwidth = bandwidth.empty() ? std::vector<double>(dim, 1.0) : std::move(bandwidth);
  return h;
}

enum class Part { real, abs };

struct QuadResult {
  double value = 0.0;
  double est_error = 0.0;
  bool converged = false;
  std::size_t nodes_per_axis = 0;
  int refinements = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kGaussX = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussW = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Above this many grid points per integrand the refinement stops.
inline constexpr double kMaxGridPoints = 1.0 * (1 << 25);

struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite Simpson (= trapezoid with one Richardson step) on `count` odd
// nodes, or `count` Gauss-Legendre points in panels of 8.
inline AxisRule axis_rule(QuadratureRule rule, double lo, double hi, std::size_t count) {
  AxisRule r;
  if (rule == QuadratureRule::trapezoid) {
    std::size_t intervals = count - 1;
    double h = (hi - lo) / static_cast<double>(intervals);
    r.nodes.resize(count);
    r.weights.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      r.nodes[i] = lo + h * static_cast<double>(i);
      double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      r.weights[i] = w * h / 3.0;
    }
  } else {
    std::size_t panels = count / kGaussX.size();
    double hp = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      double mid = lo + hp * (static_cast<double>(p) + 0.5);
      for (std::size_t g = 0; g < kGaussX.size(); ++g) {
        r.nodes.push_back(mid + 0.5 * hp * kGaussX[g]);
        r.weights.push_back(0.5 * hp * kGaussW[g]);
      }
    }
  }
  return r;
}

inline std::size_t initial_count(QuadratureRule rule, std::size_t requested) {
  if (rule == QuadratureRule::trapezoid) return requested % 2 == 1 ? requested : requested + 1;
  std::size_t panels = std::max<std::size_t>(1, (requested - 1 + 7) / 8);
  return panels * kGaussX.size();
}

inline std::size_t refine_count(QuadratureRule rule, std::size_t count) {
  return rule == QuadratureRule::trapezoid ? 2 * count - 1 : 2 * count;
}

inline std::vector<double> integrate_on_grid(std::span<const CfHandle> fs,
                                             const std::vector<AxisRule>& axes, Part part) {
  const std::size_t d = axes.size();
  std::vector<double> sums(fs.size(), 0.0);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> t(d);
  std::vector<double> row(fs.size());
  // Sums along the last axis first so that the reduction order is fixed.
  while (true) {
    double outer_w = 1.0;
    for (std::size_t c = 0; c + 1 < d; ++c) {
      t[c] = axes[c].nodes[idx[c]];
      outer_w *= axes[c].weights[idx[c]];
    }
    std::fill(row.begin(), row.end(), 0.0);
    const AxisRule& last = axes[d - 1];
    for (std::size_t k = 0; k < last.nodes.size(); ++k) {
      t[d - 1] = last.nodes[k];
      for (std::size_t f = 0; f < fs.size(); ++f) {
        Complex v = fs[f].eval(t);
        row[f] += last.weights[k] * (part == Part::abs ? std::abs(v) : v.real());
      }
    }
    for (std::size_t f = 0; f < fs.size(); ++f) sums[f] += outer_w * row[f];
    if (d == 1) break;
    std::size_t c = d - 1;
    while (c-- > 0) {
      if (++idx[c] < axes[c].nodes.size()) break;
      idx[c] = 0;
    }
    if (c == static_cast<std::size_t>(-1)) break;
  }
  return sums;
}

}  // namespace detail

// Integrates every handle over the box prod_i [lo_i, hi_i] on one shared
// grid, refining until every integral is stable to rel_tol. Sharing the grid
// means pointwise inequalities between integrands carry over exactly, since
// all rule weights are nonnegative.
inline std::vector<QuadResult> box_integrals(std::span<const CfHandle> fs,
                                             std::span<const double> lo,
                                             std::span<const double> hi,
                                             const QuadratureSpec& spec, Part part) {
  spec.validate();
  if (fs.empty()) return {};
  const std::size_t d = lo.size();
  if (d == 0 || d > 3) throw DimensionError("cube quadrature supports 1 <= d <= 3");
  for (const auto& f : fs) {
    if (f.dim != d) throw DimensionError("integrand dimension does not match the box");
  }

  // Axes along which every integrand is constant get the smallest rule and are
  // never refined.
  std::vector<bool> active(d, false);
  std::size_t want = spec.nodes_per_axis;
  for (const auto& f : fs) {
    want = std::max(want, f.node_floor);
    for (std::size_t i = 0; i < d; ++i) {
      if (f.bandwidth[i] > 0.0) active[i] = true;
      double intervals = std::ceil(4.0 * (hi[i] - lo[i]) * f.bandwidth[i] / std::numbers::pi);
      if (intervals < 1e8) want = std::max(want, static_cast<std::size_t>(intervals) + 1);
    }
  }
  std::size_t n_active = static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
  const double max_per_axis =
      n_active == 0 ? 1.0
                    : std::floor(std::pow(detail::kMaxGridPoints, 1.0 / static_cast<double>(n_active)));
  const std::size_t idle = detail::initial_count(spec.rule, 3);
  std::size_t count = detail::initial_count(
      spec.rule, std::min<std::size_t>(want, static_cast<std::size_t>(max_per_axis)));

  auto evaluate = [&](std::size_t c) {
    std::vector<detail::AxisRule> axes;
    for (std::size_t i = 0; i < d; ++i) {
      axes.push_back(detail::axis_rule(spec.rule, lo[i], hi[i], active[i] ? c : idle));
    }
    return detail::integrate_on_grid(fs, axes, part);
  };

  std::vector<QuadResult> out(fs.size());
  std::vector<double> prev = evaluate(count);
  for (std::size_t f = 0; f < fs.size(); ++f) {
    out[f].value = prev[f];
    out[f].est_error = std::abs(prev[f]);
    out[f].nodes_per_axis = count;
    out[f].converged = n_active == 0;
  }
  if (n_active == 0) return out;
  for (int level = 1; level <= spec.max_refinements; ++level) {
    std::size_t next = detail::refine_count(spec.rule, count);
    if (static_cast<double>(next) > max_per_axis) break;
    std::vector<double> cur = evaluate(next);
    bool all = true;
    for (std::size_t f = 0; f < fs.size(); ++f) {
      out[f].value = cur[f];
      out[f].est_error = std::abs(cur[f] - prev[f]);
      out[f].nodes_per_axis = next;
      out[f].refinements = level;
      out[f].converged = out[f].est_error <= spec.rel_tol * std::abs(cur[f]);
      all = all && out[f].converged;
    }
    count = next;
    prev = std::move(cur);
    if (all) break;
  }
  return out;
}

// Integrals over the cube [-1/tau, 1/tau]^d on a shared grid.
inline std::vector<QuadResult> cube_integrals(std::span<const CfHandle> fs, double tau,
                                              const QuadratureSpec& spec, Part part) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive and finite");
  if (fs.empty()) return {};
  std::vector<double> lo(fs.front().dim, -1.0 / tau), hi(fs.front().dim, 1.0 / tau);
  return box_integrals(fs, lo, hi, spec, part);
}

inline QuadResult cube_integral(const CfHandle& f, double tau, const QuadratureSpec& spec,
                                Part part = Part::real) {
  return cube_integrals(std::span<const CfHandle>(&f, 1), tau, spec, part).front();
}

// tau^d * integral over |t| <= 1/tau, for every handle on one grid, including
// the limits tau -> infinity (2^d |f(0)|) and tau -> 0 (2^d times the mean of
// f over a common period cell; periodic integrands only).
inline std::vector<QuadResult> scaled_cube_integrals(std::span<const CfHandle> fs, double tau,
                                                     const QuadratureSpec& spec, Part part) {
  if (std::isnan(tau) || tau < 0.0) throw DomainError("tau must be >= 0");
  if (fs.empty()) return {};
  const std::size_t d = fs.front().dim;
  const double cube = std::pow(2.0, static_cast<double>(d));
  if (std::isinf(tau)) {
    std::vector<QuadResult> out;
    std::vector<double> zero(d, 0.0);
    for (const auto& f : fs) {
      Complex v = f.eval(zero);
      out.push_back({cube * (part == Part::abs ? std::abs(v) : v.real()), 0.0, true, 1, 0});
    }
    return out;
  }
  if (tau > 0.0) {
    auto out = cube_integrals(fs, tau, spec, part);
    const double scale = std::pow(tau, static_cast<double>(d));
    for (auto& r : out) {
      r.value *= scale;
      r.est_error *= scale;
    }
    return out;
  }

  std::vector<double> lo(d), hi(d), cell(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> freqs;
    for (const auto& f : fs) {
      if (!f.axis_freqs) {
        throw DomainError("the tau = 0 limit needs integrands with commensurate frequencies");
      }
      const auto& fi = (*f.axis_freqs)[i];
      freqs.insert(freqs.end(), fi.begin(), fi.end());
    }
    double period = 1.0;
    if (!freqs.empty()) {
      auto g = detail::real_gcd(freqs);
      if (!g) throw DomainError("the tau = 0 limit needs commensurate frequencies");
      period = 2.0 * std::numbers::pi / *g;
    }
    lo[i] = -period / 2.0;
    hi[i] = period / 2.0;
    cell[i] = period;
  }
  auto out = box_integrals(fs, lo, hi, spec, part);
  double volume = 1.0;
  for (double c : cell) volume *= c;
  for (auto& r : out) {
    r.value *= cube / volume;
    r.est_error *= cube / volume;
  }
  return out;
}

// Right-hand side of the Esseen inequality without its dimension constant:
// tau^d * integral of |f| over |t| <= 1/tau.
inline QuadResult esseen_upper(const CfHandle& f, double tau, const QuadratureSpec& spec) {
  return scaled_cube_integrals(std::span<const CfHandle>(&f, 1), tau, spec, Part::abs).front();
}

// Two-sided proxy for Q(F, tau), valid for symmetric laws with nonnegative cf.
inline QuadResult q_proxy_symmetric(const CfHandle& f, double tau, const QuadratureSpec& spec) {
  if (!f.symmetric_nonneg) {
    throw ContractError("the proxy is only valid for symmetric laws with nonnegative cf");
  }
  return scaled_cube_integrals(std::span<const CfHandle>(&f, 1), tau, spec, Part::real).front();
}

// Unclamped proxy of Q(H_1^lambda, radius).
inline QuadResult q_H_detail(const WeightMatrix& a, double lambda_exp, double radius,
                             const QuadratureSpec& spec) {
  if (std::isnan(radius) || radius < 0.0) throw DomainError("radius must be >= 0");
  if (std::isinf(radius)) return {1.0, 0.0, true, 0, 0};
  return q_proxy_symmetric(cf_handle_H(a, 1.0, lambda_exp), radius, spec);
}

// Proxy of Q(H_1^lambda, radius), clamped at 1.
inline double q_H(const WeightMatrix& a, double lambda_exp, double radius,
                  const QuadratureSpec& spec) {
  return std::min(1.0, q_H_detail(a, lambda_exp, radius, spec).value);
}

}  // namespace anticonc
