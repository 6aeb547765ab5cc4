#pragma once

// Upper bounds for Q(F_a, tau) in terms of concentration of the compound
// Poisson laws H_1^lambda, and the assembled per-scenario report.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anticonc/charfn.hpp"
#include "anticonc/core.hpp"
#include "anticonc/exact.hpp"

namespace anticonc {

struct BoundValue {
  double value = 0.0;
  bool converged = true;
};

// Throws ContractError unless every atom of v is an atom of g carrying at
// least as much mass (tolerance kMassTol).
inline void validate_sub_measure(const DiscreteDist1D& v, const DiscreteDist1D& g) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    double z = v.atoms()[i];
    double gz = g.mass_at(z);
    std::ostringstream os;
    os.precision(17);
    if (gz == 0.0) {
      os << "V has an atom at z = " << z << " which is not an atom of G";
      throw ContractError(os.str());
    }
    if (v.masses()[i] > gz + kMassTol) {
      os << "V{" << z << "} = " << v.masses()[i] << " exceeds G{" << z << "} = " << gz;
      throw ContractError(os.str());
    }
  }
}

// V = p1 G1: the part of g outside [-threshold, threshold].
inline DiscreteDist1D tail_measure(const DiscreteDist1D& g, double threshold) {
  std::vector<double> atoms, masses;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.atoms()[i]) > threshold) {
      atoms.push_back(g.atoms()[i]);
      masses.push_back(g.masses()[i]);
    }
  }
  return DiscreteDist1D::measure(std::move(atoms), std::move(masses));
}

namespace detail {

// (1 + strict_floor(tau / (eps |z|)))^-d for z != 0, with the limits
// tau = 0 (weight 1) and tau = inf (weight 0). Atoms beyond tau / eps get
// weight 1 by the same comparison tail_mass uses.
inline double floor_weight(double z, double tau, double epsilon, std::size_t d) {
  double az = std::abs(z);
  if (az == 0.0) return 0.0;
  if (tau == 0.0) return 1.0;
  if (std::isinf(tau)) return 0.0;
  if (az > tau / epsilon) return 1.0;
  double ratio = tau / (epsilon * az);
  auto k = ratio > 0.0 && std::isfinite(ratio) ? strict_floor(ratio) : 0;
  return std::pow(1.0 + static_cast<double>(k), -static_cast<double>(d));
}

}  // namespace detail

// V{dz} = (1 + strict_floor(tau / (eps |z|)))^-d G{dz}; the atom at 0 drops out.
inline DiscreteDist1D floor_weighted_measure(const DiscreteDist1D& g, double tau,
                                             double epsilon, std::size_t d) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  std::vector<double> atoms, masses;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double w = detail::floor_weight(g.atoms()[i], tau, epsilon, d);
    if (w > 0.0) {
      atoms.push_back(g.atoms()[i]);
      masses.push_back(w * g.masses()[i]);
    }
  }
  return DiscreteDist1D::measure(std::move(atoms), std::move(masses));
}

// lambda(G, tau / eps) = V{R} for the floor-weighted V. Accumulated as
// p(tau / eps) plus the inner atoms so that lambda >= p holds in floating point.
inline double corollary2_lambda(const DiscreteDist1D& g, double tau, double epsilon,
                                std::size_t d) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (std::isnan(tau) || tau < 0.0) throw DomainError("tau must be >= 0");
  const double threshold = tau / epsilon;
  double inner = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double z = g.atoms()[i];
    if (std::abs(z) > threshold) continue;
    inner += detail::floor_weight(z, tau, epsilon, d) * g.masses()[i];
  }
  return std::min(1.0, tail_mass(g, threshold) + inner);
}

// sum_j w_j Q(H_1^lambda, tau / |z_j|) with W = V / lambda; the z = 0 atom
// contributes w_j * 1 (radius infinity). Atoms +-z share one evaluation.
inline BoundValue theorem1_rhs(const WeightMatrix& a, const DiscreteDist1D& v, double tau,
                               const QuadratureSpec& spec) {
  const double lambda = v.total_mass();
  if (!(lambda > 0.0)) throw DomainError("Theorem 1 needs V with positive total mass");
  if (std::isnan(tau) || tau < 0.0) throw DomainError("tau must be >= 0");
  std::map<double, double> by_radius_atom;  // |z| -> W mass
  for (std::size_t j = 0; j < v.size(); ++j) {
    by_radius_atom[std::abs(v.atoms()[j])] += v.masses()[j] / lambda;
  }
  BoundValue out;
  for (const auto& [az, w] : by_radius_atom) {
    if (az <= kMergeTol) {
      out.value += w;
      continue;
    }
    double radius = std::isinf(tau) ? kInf : tau / az;
    QuadResult q = q_H_detail(a, lambda, radius, spec);
    out.value += w * std::min(1.0, q.value);
    out.converged = out.converged && q.converged;
  }
  return out;
}

inline BoundValue theorem1_rhs_checked(const WeightMatrix& a, const DiscreteDist1D& v,
                                       const DiscreteDist1D& g, double tau,
                                       const QuadratureSpec& spec) {
  validate_sub_measure(v, g);
  return theorem1_rhs(a, v, tau, spec);
}

// Q(H_1^{p(tau / eps)}, eps).
inline BoundValue corollary1_rhs(const WeightMatrix& a, const DiscreteDist1D& g, double tau,
                                 double epsilon, const QuadratureSpec& spec) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("epsilon must be positive and finite");
  }
  double p = tail_mass(g, tau / epsilon);
  QuadResult q = q_H_detail(a, p, epsilon, spec);
  return {std::min(1.0, q.value), q.converged};
}

// lambda^-1 Q(H_1^lambda, eps) with lambda = corollary2_lambda.
inline BoundValue corollary2_rhs(const WeightMatrix& a, const DiscreteDist1D& g, double tau,
                                 double epsilon, const QuadratureSpec& spec) {
  double lambda = corollary2_lambda(g, tau, epsilon, a.d());
  if (!(lambda > 0.0)) throw DomainError("Corollary 2 is undefined when lambda = 0");
  QuadResult q = q_H_detail(a, lambda, epsilon, spec);
  return {std::min(1.0, q.value) / lambda, q.converged};
}

struct RegularityCheck {
  double lhs = 0.0;         // Q(F, mu)
  double rhs_factor = 0.0;  // (1 + strict_floor(mu / lambda))^d Q(F, lambda)
};

inline RegularityCheck regularity_check(const DiscreteDist1D& f, double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) throw DomainError("mu and lambda must be positive");
  double factor = 1.0 + static_cast<double>(strict_floor(mu / lambda));
  return {q_exact_1d(f, mu), factor * q_exact_1d(f, lambda)};
}

inline RegularityCheck regularity_check(const DiscreteDistD& f, double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) throw DomainError("mu and lambda must be positive");
  double factor = std::pow(1.0 + static_cast<double>(strict_floor(mu / lambda)),
                           static_cast<double>(f.dim()));
  return {q_exact(f, mu), factor * q_exact(f, lambda)};
}

enum class VChoice { tail, floor_weighted, custom };

inline const char* to_string(VChoice v) {
  switch (v) {
    case VChoice::tail:
      return "tail";
    case VChoice::floor_weighted:
      return "floor";
    case VChoice::custom:
      return "custom";
  }
  return "?";
}

struct BoundReport {
  Scenario scenario;
  VChoice v_choice = VChoice::tail;
  std::optional<double> q_exact;
  std::optional<McEstimate> q_mc;
  std::string q_method;  // "enumeration", "monte-carlo", "limit" or ""
  std::optional<double> esseen;
  std::optional<double> thm1;  // Theorem 1 with the selected V
  std::optional<double> thm1_tail;
  std::optional<double> thm1_floor;
  std::optional<double> cor1;
  std::optional<double> cor2;
  double cor2_lambda = 0.0;
  double p_tail = 0.0;
  std::map<std::string, double> ratios;  // bound / q_exact
  std::vector<std::string> flags;

  // Best available Q: exact, else the Monte Carlo estimate.
  std::optional<double> q_value() const {
    if (q_exact) return q_exact;
    if (q_mc) return q_mc->estimate;
    return std::nullopt;
  }
};

namespace detail {

template <typename Fn>
std::optional<double> guarded(std::vector<std::string>& flags, const std::string& name, Fn&& fn) {
  try {
    BoundValue b = fn();
    if (!b.converged) flags.push_back(name + ":quadrature_not_converged");
    if (b.value >= 1.0) flags.push_back(name + ":vacuous");
    return b.value;
  } catch (const DomainError& e) {
    flags.push_back(name + ":undefined");
    return std::nullopt;
  }
}

}  // namespace detail

// Exact Q when the enumeration fits, Monte Carlo otherwise.
inline void fill_q(BoundReport& r) {
  const Scenario& s = r.scenario;
  if (std::isinf(s.tau)) {
    r.q_exact = 1.0;
    r.q_method = "limit";
    return;
  }
  try {
    DiscreteDistD fa = weighted_sum_dist(s.weights, s.law_x, s.enumeration_cap);
    r.q_exact = q_exact(fa, s.tau);
    r.q_method = "enumeration";
    return;
  } catch (const ResourceError&) {
  } catch (const DimensionError&) {
  }
  try {
    SampleBatch b = sample_weighted_sum(s.weights, s.law_x, s.mc_samples, s.seed);
    r.q_mc = q_monte_carlo(b, s.tau);
    r.q_method = "monte-carlo";
  } catch (const Error& e) {
    r.flags.push_back("q:unavailable");
  }
}

// Every bound for one scenario. Theorem 1 is evaluated with both canonical V
// choices; `thm1` holds the selected one (or the custom V).
inline BoundReport build_report(const Scenario& s, VChoice choice = VChoice::tail,
                                const std::optional<DiscreteDist1D>& custom_v = std::nullopt,
                                bool with_q = true) {
  s.validate();
  BoundReport r;
  r.scenario = s;
  r.v_choice = choice;
  const WeightMatrix& a = s.weights;
  const DiscreteDist1D g = symmetrize(s.law_x);
  const double threshold = s.tau / s.epsilon;
  r.p_tail = tail_mass(g, threshold);
  r.cor2_lambda = corollary2_lambda(g, s.tau, s.epsilon, s.d());

  if (with_q) fill_q(r);

  r.esseen = detail::guarded(r.flags, "esseen", [&] {
    QuadResult q = esseen_upper(cf_handle_Fa(a, s.law_x), s.tau, s.quadrature);
    return BoundValue{q.value, q.converged};
  });
  r.thm1_tail = detail::guarded(r.flags, "thm1_tail", [&] {
    return theorem1_rhs(a, tail_measure(g, threshold), s.tau, s.quadrature);
  });
  r.thm1_floor = detail::guarded(r.flags, "thm1_floor", [&] {
    return theorem1_rhs(a, floor_weighted_measure(g, s.tau, s.epsilon, s.d()), s.tau,
                        s.quadrature);
  });
  switch (choice) {
    case VChoice::tail:
      r.thm1 = r.thm1_tail;
      break;
    case VChoice::floor_weighted:
      r.thm1 = r.thm1_floor;
      break;
    case VChoice::custom:
      if (!custom_v) throw DomainError("custom V choice needs a measure");
      validate_sub_measure(*custom_v, g);
      r.thm1 = detail::guarded(r.flags, "thm1", [&] {
        return theorem1_rhs(a, *custom_v, s.tau, s.quadrature);
      });
      break;
  }
  r.cor1 = detail::guarded(r.flags, "cor1",
                           [&] { return corollary1_rhs(a, g, s.tau, s.epsilon, s.quadrature); });
  r.cor2 = detail::guarded(r.flags, "cor2",
                           [&] { return corollary2_rhs(a, g, s.tau, s.epsilon, s.quadrature); });

  if (r.q_exact && *r.q_exact > 0.0) {
    auto put = [&](const char* name, const std::optional<double>& v) {
      if (v) r.ratios[name] = *v / *r.q_exact;
    };
    put("esseen", r.esseen);
    put("thm1", r.thm1);
    put("thm1_tail", r.thm1_tail);
    put("thm1_floor", r.thm1_floor);
    put("cor1", r.cor1);
    put("cor2", r.cor2);
  }
  return r;
}

}  // namespace anticonc
