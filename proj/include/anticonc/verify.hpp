#pragma once

// Checks of the inequalities behind Theorem 1: the generalized Holder step,
// the pointwise cf bound, the Jensen chain, plus empirical constants for the
// "<<_d" statements over generated scenario suites.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "anticonc/bounds.hpp"
#include "anticonc/charfn.hpp"
#include "anticonc/core.hpp"
#include "anticonc/exact.hpp"

namespace anticonc {

// Relative slack for inequalities between quadrature-derived quantities.
inline constexpr double kQuadSlack = 1e-9;
// Absolute slack for exact-arithmetic quantities.
inline constexpr double kExactSlack = 1e-12;

enum class FamilyKind { all_ones, arithmetic, geometric, random_uniform, dilated };

struct FamilySpec {
  FamilyKind kind = FamilyKind::all_ones;
  std::size_t n = 1;
  std::size_t d = 1;
  double step = 1.0;
  double ratio = 2.0;
  double scale = 1.0;  // dilation factor gamma
  std::uint64_t seed = 0;
  FamilyKind base = FamilyKind::all_ones;  // dilated only
};

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::all_ones:
      return "all_ones";
    case FamilyKind::arithmetic:
      return "arithmetic";
    case FamilyKind::geometric:
      return "geometric";
    case FamilyKind::random_uniform:
      return "random_uniform";
    case FamilyKind::dilated:
      return "dilated";
  }
  return "?";
}

inline WeightMatrix generate_family(const FamilySpec& f) {
  if (f.n == 0 || f.d == 0) throw DomainError("family needs n, d >= 1");
  std::vector<double> e(f.n * f.d, 0.0);
  switch (f.kind) {
    case FamilyKind::all_ones:
      for (std::size_t k = 0; k < f.n; ++k) e[k * f.d] = 1.0;
      break;
    case FamilyKind::arithmetic:
      for (std::size_t k = 0; k < f.n; ++k) e[k * f.d] = static_cast<double>(k + 1) * f.step;
      break;
    case FamilyKind::geometric:
      for (std::size_t k = 0; k < f.n; ++k) {
        e[k * f.d] = f.step * std::pow(f.ratio, static_cast<double>(k));
      }
      break;
    case FamilyKind::random_uniform: {
      std::mt19937_64 rng(f.seed);
      for (double& x : e) x = 2.0 * detail::uniform01(rng) - 1.0;
      break;
    }
    case FamilyKind::dilated: {
      if (f.base == FamilyKind::dilated) throw DomainError("dilated family needs a base family");
      FamilySpec base = f;
      base.kind = f.base;
      return generate_family(base).scaled(f.scale);
    }
  }
  return WeightMatrix(f.n, f.d, std::move(e));
}

struct HolderCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  bool converged = false;
};

// lhs = int_{|t|<=T} exp(-(lambda/2) sum_j p_j sum_k (1 - cos(<t,a_k> z_j))) dt
// rhs = prod_j (int_{|t|<=T} H_{z_j}^lambda(t) dt)^{p_j}
// All integrals share one grid.
inline HolderCheck check_holder(const WeightMatrix& a, const DiscreteDist1D& w, double lambda_exp,
                                double t_max, const QuadratureSpec& spec) {
  if (!w.is_probability()) throw DomainError("W must be a probability law");
  if (w.size() > 8) throw DomainError("W is limited to 8 atoms");
  if (!(lambda_exp > 0.0) || !(t_max > 0.0)) throw DomainError("lambda and T must be positive");

  std::vector<CfHandle> fs;
  fs.push_back(CfHandle{});  // placeholder for the mixed integrand
  std::vector<double> bw(a.d(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    fs.push_back(cf_handle_H(a, w.atoms()[j], lambda_exp));
    for (std::size_t i = 0; i < a.d(); ++i) bw[i] = std::max(bw[i], fs.back().bandwidth[i]);
  }
  fs[0] = cf_handle(
      a.d(),
      [a, w, lambda_exp](std::span<const double> t) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
          double inner = 0.0;
          for (std::size_t k = 0; k < a.n(); ++k) {
            inner += 1.0 - std::cos(dot(t, a.row(k)) * w.atoms()[j]);
          }
          s += w.masses()[j] * inner;
        }
        return Complex{std::exp(-0.5 * lambda_exp * s), 0.0};
      },
      true, bw);

  auto res = cube_integrals(fs, 1.0 / t_max, spec, Part::real);
  HolderCheck out;
  out.lhs = res[0].value;
  double log_rhs = 0.0;
  out.converged = true;
  for (std::size_t j = 0; j < res.size(); ++j) out.converged = out.converged && res[j].converged;
  for (std::size_t j = 0; j < w.size(); ++j) log_rhs += w.masses()[j] * std::log(res[j + 1].value);
  out.rhs = std::exp(log_rhs);
  out.holds = out.lhs <= out.rhs * (1.0 + kQuadSlack);
  return out;
}

// The six displayed lines of the Jensen chain, in order:
//  0 tau^d int |cf_Fa|
//  1 tau^d int exp(-1/2 sum_k E(1 - cos(<t,a_k> Xsym)))       via |cf_X|^2
//  2 the same with the expectation written as an integral over G
//  3 the same with G replaced by V = lambda W
//  4 exp(int log(tau^d int H_z^lambda) W(dz))
//  5 int (tau^d int H_z^lambda) W(dz)
// Relations between consecutive lines: <=, =, <=, <=, <=.
struct JensenChain {
  std::array<std::optional<double>, 6> values;
  std::array<std::optional<bool>, 5> holds;  // nullopt: vacuous
  bool vacuous = false;
  bool converged = true;

  bool ok() const {
    for (const auto& h : holds) {
      if (h && !*h) return false;
    }
    return true;
  }
};

inline constexpr std::array<const char*, 6> kJensenLineNames = {
    "esseen", "symmetrized", "g_integral", "v_integral", "log_mixture", "mixture"};

inline JensenChain check_jensen_chain(const Scenario& s, const DiscreteDist1D& v) {
  s.validate();
  const WeightMatrix& a = s.weights;
  const DiscreteDist1D& x = s.law_x;
  const DiscreteDist1D g = symmetrize(x);
  validate_sub_measure(v, g);
  const double lambda = v.total_mass();

  CfHandle fa = cf_handle_Fa(a, x);
  std::vector<CfHandle> fs;
  fs.push_back(fa);
  fs.push_back(cf_handle(
      a.d(),
      [a, x](std::span<const double> t) {
        double s2 = 0.0;
        for (std::size_t k = 0; k < a.n(); ++k) s2 += 1.0 - std::norm(cf_X(x, dot(t, a.row(k))));
        return Complex{std::exp(-0.5 * s2), 0.0};
      },
      true, fa.bandwidth));
  fs.back().axis_freqs = fa.axis_freqs;
  auto mixed = [a](const DiscreteDist1D& m, double scale) {
    return [a, m, scale](std::span<const double> t) {
      double s2 = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) {
        double inner = 0.0;
        for (std::size_t k = 0; k < a.n(); ++k) inner += 1.0 - std::cos(dot(t, a.row(k)) * m.atoms()[j]);
        s2 += scale * m.masses()[j] * inner;
      }
      return Complex{std::exp(-0.5 * s2), 0.0};
    };
  };
  fs.push_back(cf_handle(a.d(), mixed(g, 1.0), true, fa.bandwidth));
  fs.back().axis_freqs = fa.axis_freqs;

  JensenChain out;
  if (!(lambda > 0.0)) {
    auto res = scaled_cube_integrals(fs, s.tau, s.quadrature, Part::abs);
    for (std::size_t i = 0; i < 3; ++i) {
      out.values[i] = res[i].value;
      out.converged = out.converged && res[i].converged;
    }
    out.vacuous = true;
    return out;
  }

  const DiscreteDist1D w = v.scaled_mass(1.0 / lambda);
  std::vector<double> bw = fa.bandwidth;
  std::vector<std::vector<double>> freqs(a.d());
  bool periodic = fa.axis_freqs.has_value();
  const std::size_t first_h = fs.size() + 1;  // after the V-integral line
  std::vector<CfHandle> hs;
  for (std::size_t j = 0; j < w.size(); ++j) {
    hs.push_back(cf_handle_H(a, w.atoms()[j], lambda));
    for (std::size_t i = 0; i < a.d(); ++i) {
      bw[i] = std::max(bw[i], hs.back().bandwidth[i]);
      const auto& fi = (*hs.back().axis_freqs)[i];
      freqs[i].insert(freqs[i].end(), fi.begin(), fi.end());
    }
  }
  fs.push_back(cf_handle(a.d(), mixed(w, lambda), true, bw));
  if (periodic) {
    for (std::size_t i = 0; i < a.d(); ++i) {
      const auto& fi = (*fa.axis_freqs)[i];
      freqs[i].insert(freqs[i].end(), fi.begin(), fi.end());
    }
    fs.back().axis_freqs = freqs;
  }
  for (auto& h : hs) fs.push_back(std::move(h));

  auto res = scaled_cube_integrals(fs, s.tau, s.quadrature, Part::abs);
  for (const auto& r : res) out.converged = out.converged && r.converged;
  for (std::size_t i = 0; i < 4; ++i) out.values[i] = res[i].value;
  double log_mix = 0.0, mix = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    double ij = res[first_h + j].value;
    log_mix += w.masses()[j] * std::log(ij);
    mix += w.masses()[j] * ij;
  }
  out.values[4] = std::exp(log_mix);
  out.values[5] = mix;

  auto le = [](double lo, double hi) { return lo <= hi * (1.0 + kQuadSlack); };
  const auto& val = out.values;
  out.holds[0] = le(*val[0], *val[1]);
  out.holds[1] = std::abs(*val[1] - *val[2]) <= kQuadSlack * std::abs(*val[2]);
  out.holds[2] = le(*val[2], *val[3]);
  out.holds[3] = le(*val[3], *val[4]);
  out.holds[4] = le(*val[4], *val[5]);
  return out;
}

// max over t of |cf_Fa(t)| - exp(-(1 - |cf_Fa(t)|^2) / 2); never positive
// beyond rounding.
inline double check_cf_inequality(const DiscreteDist1D& f, const WeightMatrix& a,
                                  std::span<const std::vector<double>> t_grid) {
  double worst = -kInf;
  for (const auto& t : t_grid) {
    double m = std::abs(cf_Fa(a, f, t));
    worst = std::max(worst, m - std::exp(-0.5 * (1.0 - m * m)));
  }
  return worst;
}

struct ConstantEstimate {
  std::string bound;
  std::size_t d = 1;
  double max_ratio = 0.0;
  std::string argmax_id;
  std::uint64_t seed = 0;
  std::size_t used = 0;  // scenarios with a non-vacuous bound
};

inline std::optional<double> bound_by_name(const BoundReport& r, const std::string& name) {
  if (name == "esseen") return r.esseen;
  if (name == "thm1") return r.thm1;
  if (name == "thm1_tail") return r.thm1_tail;
  if (name == "thm1_floor") return r.thm1_floor;
  if (name == "cor1") return r.cor1;
  if (name == "cor2") return r.cor2;
  throw DomainError("unknown bound name: " + name);
}

// max over reports of Q / bound, skipping absent and vacuous (>= 1) bounds.
// Ties resolve to the smallest scenario id, so the result does not depend on
// the order of the reports.
inline ConstantEstimate estimate_constant(const std::string& bound,
                                          std::span<const BoundReport> reports,
                                          std::uint64_t seed = 0) {
  ConstantEstimate est;
  est.bound = bound;
  est.seed = seed;
  bool any = false;
  for (const auto& r : reports) {
    auto b = bound_by_name(r, bound);
    auto q = r.q_value();
    if (!b || !q || *b >= 1.0 || *b <= 0.0) continue;
    double ratio = *q / *b;
    ++est.used;
    if (!any || ratio > est.max_ratio ||
        (ratio == est.max_ratio && r.scenario.id < est.argmax_id)) {
      est.max_ratio = ratio;
      est.argmax_id = r.scenario.id;
      est.d = r.scenario.d();
      any = true;
    }
  }
  if (!any) throw DomainError("no scenario gives a non-vacuous " + bound + " bound");
  return est;
}

inline ConstantEstimate estimate_constant(const std::string& bound,
                                          std::span<const Scenario> suite,
                                          std::uint64_t seed = 0) {
  std::vector<BoundReport> reports;
  reports.reserve(suite.size());
  for (const auto& s : suite) reports.push_back(build_report(s));
  return estimate_constant(bound, reports, seed);
}

// Laws of X used by generated suites: at most 3 atoms so that enumeration
// stays small.
inline DiscreteDist1D random_law(std::mt19937_64& rng) {
  double u = detail::uniform01(rng);
  switch (static_cast<int>(detail::uniform01(rng) * 5.0)) {
    case 0:
      return DiscreteDist1D::probability({-1.0, 1.0}, {0.5, 0.5});
    case 1: {
      double p = 0.1 + 0.8 * u;
      return DiscreteDist1D::probability({0.0, 1.0}, {1.0 - p, p});
    }
    case 2: {
      double q = 0.2 + 0.8 * u;
      return DiscreteDist1D::probability({-1.0, 0.0, 1.0}, {q / 2, 1.0 - q, q / 2});
    }
    case 3: {
      double m0 = 0.1 + detail::uniform01(rng), m1 = 0.1 + detail::uniform01(rng),
             m2 = 0.1 + detail::uniform01(rng);
      double t = m0 + m1 + m2;
      return DiscreteDist1D::probability({-1.0, 0.5 + u, 2.0}, {m0 / t, m1 / t, m2 / t});
    }
    default: {
      double p = 0.2 + 0.6 * u;
      return DiscreteDist1D::probability({-0.5, 1.5}, {p, 1.0 - p});
    }
  }
}

struct SuiteSpec {
  std::size_t d = 1;
  std::size_t count = 100;
  std::size_t n_max = 12;
  std::uint64_t seed = 1;
  std::vector<FamilyKind> families = {FamilyKind::all_ones, FamilyKind::arithmetic,
                                      FamilyKind::random_uniform};
  double tau_min = 0.05;
  double tau_max = 3.0;
  double eps_min = 0.25;
  double eps_max = 4.0;
  std::uint64_t outcome_cap = std::uint64_t{1} << 16;
  std::size_t disk_atom_cap = 1024;
  QuadratureSpec quadrature;
};

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * detail::uniform01(rng));
}

// Deterministic in (spec.seed, index). n is reduced until the law of S_a is
// small enough to enumerate (and, for d = 2, to cover exactly).
inline std::vector<Scenario> generate_suite(const SuiteSpec& spec) {
  std::vector<Scenario> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    Scenario s;
    FamilySpec fam;
    fam.kind = spec.families[i % spec.families.size()];
    fam.d = spec.d;
    fam.seed = rng();
    s.law_x = random_law(rng);
    std::size_t n = 1 + static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(spec.n_max));
    auto outcomes = [&](std::size_t k) { return std::pow(static_cast<double>(s.law_x.size()), static_cast<double>(k)); };
    while (n > 1 && outcomes(n) > static_cast<double>(spec.outcome_cap)) --n;
    if (spec.d == 2 && fam.kind == FamilyKind::random_uniform) {
      while (n > 1 && outcomes(n) > static_cast<double>(spec.disk_atom_cap)) --n;
    }
    fam.n = n;
    s.weights = generate_family(fam);
    s.tau = log_uniform(rng, spec.tau_min, spec.tau_max);
    s.epsilon = log_uniform(rng, spec.eps_min, spec.eps_max);
    s.seed = rng();
    s.quadrature = spec.quadrature;
    s.id = "s" + std::to_string(spec.seed) + "-" + std::to_string(i) + "-" + to_string(fam.kind);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace anticonc
