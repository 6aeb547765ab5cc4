#pragma once

// JSON and CSV formats: scenarios, bound reports, sweep specifications.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "anticonc/bounds.hpp"
#include "anticonc/core.hpp"
#include "anticonc/verify.hpp"

namespace anticonc {

using Json = nlohmann::json;

// Malformed or invalid input files.
struct InputError : Error {
  using Error::Error;
};

// Defaults for quadrature settings, overridable through ANTICONC_QUAD_NODES
// and ANTICONC_QUAD_REL_TOL.
inline QuadratureSpec default_quadrature() {
  QuadratureSpec q;
  if (const char* s = std::getenv("ANTICONC_QUAD_NODES"); s && *s) {
    char* end = nullptr;
    unsigned long v = std::strtoul(s, &end, 10);
    if (*end != '\0') throw InputError("ANTICONC_QUAD_NODES is not an integer");
    q.nodes_per_axis = v;
  }
  if (const char* s = std::getenv("ANTICONC_QUAD_REL_TOL"); s && *s) {
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (*end != '\0') throw InputError("ANTICONC_QUAD_REL_TOL is not a number");
    q.rel_tol = v;
  }
  return q;
}

// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double number_or_inf(const Json& j, const char* field) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw InputError(std::string(field) + ": expected a number or \"inf\"");
  }
  if (!j.is_number()) throw InputError(std::string(field) + ": expected a number");
  return j.get<double>();
}

inline Json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline Json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  return number_or_inf(*v);
}

}  // namespace detail

inline QuadratureRule parse_rule(const std::string& s) {
  if (s == "trapezoid") return QuadratureRule::trapezoid;
  if (s == "gauss-legendre-composite") return QuadratureRule::gauss_legendre_composite;
  throw InputError("unknown quadrature rule: " + s);
}

inline const char* to_string(QuadratureRule r) {
  return r == QuadratureRule::trapezoid ? "trapezoid" : "gauss-legendre-composite";
}

inline QuadratureSpec quadrature_from_json(const Json& j) {
  QuadratureSpec q = default_quadrature();
  if (j.is_null()) return q;
  if (!j.is_object()) throw InputError("quadrature: expected an object");
  if (j.contains("nodes_per_axis")) q.nodes_per_axis = j.at("nodes_per_axis").get<std::size_t>();
  if (j.contains("max_refinements")) q.max_refinements = j.at("max_refinements").get<int>();
  if (j.contains("rel_tol")) q.rel_tol = j.at("rel_tol").get<double>();
  if (j.contains("rule")) q.rule = parse_rule(j.at("rule").get<std::string>());
  q.validate();
  return q;
}

inline Json to_json(const QuadratureSpec& q) {
  return {{"nodes_per_axis", q.nodes_per_axis},
          {"max_refinements", q.max_refinements},
          {"rel_tol", q.rel_tol},
          {"rule", to_string(q.rule)}};
}

inline DiscreteDist1D law_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.contains("masses")) {
    throw InputError("law: expected {\"atoms\": [...], \"masses\": [...]}");
  }
  return DiscreteDist1D::probability(j.at("atoms").get<std::vector<double>>(),
                                     j.at("masses").get<std::vector<double>>());
}

inline DiscreteDist1D measure_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.contains("masses")) {
    throw InputError("measure: expected {\"atoms\": [...], \"masses\": [...]}");
  }
  return DiscreteDist1D::measure(j.at("atoms").get<std::vector<double>>(),
                                 j.at("masses").get<std::vector<double>>());
}

inline Json to_json(const DiscreteDist1D& f) {
  return {{"atoms", std::vector<double>(f.atoms().begin(), f.atoms().end())},
          {"masses", std::vector<double>(f.masses().begin(), f.masses().end())}};
}

// Accepts [[...], ...] or, for d = 1, a flat list of numbers.
inline WeightMatrix weights_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw InputError("weights: expected a nonempty array");
  if (j.front().is_number()) return WeightMatrix::scalars(j.get<std::vector<double>>());
  return WeightMatrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

inline Json to_json(const WeightMatrix& a) {
  Json rows = Json::array();
  for (std::size_t k = 0; k < a.n(); ++k) {
    rows.push_back(std::vector<double>(a.row(k).begin(), a.row(k).end()));
  }
  return rows;
}

inline Scenario scenario_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw InputError("scenario: expected an object");
    Scenario s;
    s.id = j.value("id", std::string{});
    s.weights = weights_from_json(j.at("weights"));
    s.law_x = law_from_json(j.at("law_x"));
    s.tau = detail::number_or_inf(j.at("tau"), "tau");
    s.epsilon = j.contains("epsilon") ? detail::number_or_inf(j.at("epsilon"), "epsilon") : 1.0;
    s.quadrature = quadrature_from_json(j.value("quadrature", Json()));
    s.enumeration_cap = j.value("enumeration_cap", kDefaultEnumerationCap);
    s.seed = j.value("seed", std::uint64_t{1});
    s.mc_samples = j.value("mc_samples", std::size_t{1'000'000});
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("scenario: ") + e.what());
  } catch (const DimensionError& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
}

inline Json to_json(const Scenario& s) {
  return {{"id", s.id},
          {"weights", to_json(s.weights)},
          {"law_x", to_json(s.law_x)},
          {"tau", detail::number_or_inf(s.tau)},
          {"epsilon", s.epsilon},
          {"quadrature", to_json(s.quadrature)},
          {"enumeration_cap", s.enumeration_cap},
          {"seed", s.seed},
          {"mc_samples", s.mc_samples}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline Json to_json(const BoundReport& r) {
  Json j;
  j["scenario"] = to_json(r.scenario);
  j["v_choice"] = to_string(r.v_choice);
  j["q_exact"] = detail::optional_number(r.q_exact);
  j["q_method"] = r.q_method;
  if (r.q_mc) {
    j["q_mc"] = {{"estimate", r.q_mc->estimate},
                 {"stderr", r.q_mc->stderr_},
                 {"seed", r.scenario.seed},
                 {"samples", r.scenario.mc_samples}};
  } else {
    j["q_mc"] = nullptr;
  }
  j["esseen"] = detail::optional_number(r.esseen);
  j["thm1"] = detail::optional_number(r.thm1);
  j["thm1_tail"] = detail::optional_number(r.thm1_tail);
  j["thm1_floor"] = detail::optional_number(r.thm1_floor);
  j["cor1"] = detail::optional_number(r.cor1);
  j["cor2"] = detail::optional_number(r.cor2);
  j["cor2_lambda"] = r.cor2_lambda;
  j["p_tail"] = r.p_tail;
  j["ratios"] = r.ratios;
  j["flags"] = r.flags;
  return j;
}

inline constexpr const char* kCsvHeader =
    "scenario_id,n,d,tau,epsilon,q_exact,q_mc,q_mc_stderr,esseen,thm1_tail,thm1_floor,cor1,"
    "cor2,cor2_lambda,flags";

inline std::string csv_row(const BoundReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  std::ostringstream os;
  std::string flags;
  for (std::size_t i = 0; i < r.flags.size(); ++i) flags += (i ? ";" : "") + r.flags[i];
  os << r.scenario.id << ',' << r.scenario.n() << ',' << r.scenario.d() << ','
     << format_double(r.scenario.tau) << ',' << format_double(r.scenario.epsilon) << ','
     << opt(r.q_exact) << ',' << (r.q_mc ? format_double(r.q_mc->estimate) : "") << ','
     << (r.q_mc ? format_double(r.q_mc->stderr_) : "") << ',' << opt(r.esseen) << ','
     << opt(r.thm1_tail) << ',' << opt(r.thm1_floor) << ',' << opt(r.cor1) << ','
     << opt(r.cor2) << ',' << format_double(r.cor2_lambda) << ',' << flags;
  return os.str();
}

inline FamilyKind parse_family_kind(const std::string& s) {
  for (auto k : {FamilyKind::all_ones, FamilyKind::arithmetic, FamilyKind::geometric,
                 FamilyKind::random_uniform, FamilyKind::dilated}) {
    if (s == to_string(k)) return k;
  }
  throw InputError("unknown family kind: " + s);
}

inline FamilySpec family_from_json(const Json& j) {
  FamilySpec f;
  f.kind = parse_family_kind(j.at("kind").get<std::string>());
  f.n = j.value("n", std::size_t{1});
  f.d = j.value("d", std::size_t{1});
  f.step = j.value("step", 1.0);
  f.ratio = j.value("ratio", 2.0);
  f.scale = j.value("scale", 1.0);
  f.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("base")) f.base = parse_family_kind(j.at("base").get<std::string>());
  return f;
}

enum class SweepAxis { tau, epsilon, lambda_exp, n };

struct SweepSpec {
  Scenario base;
  SweepAxis axis = SweepAxis::tau;
  std::vector<double> values;
  std::optional<FamilySpec> family;
};

inline SweepSpec sweep_from_json(const Json& j) {
  try {
    SweepSpec s;
    if (j.contains("family")) {
      s.family = family_from_json(j.at("family"));
      Json base = j.at("base");
      if (!base.contains("weights")) base["weights"] = to_json(generate_family(*s.family));
      s.base = scenario_from_json(base);
    } else {
      s.base = scenario_from_json(j.at("base"));
    }
    std::string axis = j.at("axis").get<std::string>();
    if (axis == "tau") {
      s.axis = SweepAxis::tau;
    } else if (axis == "epsilon") {
      s.axis = SweepAxis::epsilon;
    } else if (axis == "lambda_exp") {
      s.axis = SweepAxis::lambda_exp;
    } else if (axis == "n") {
      s.axis = SweepAxis::n;
    } else {
      throw InputError("unknown sweep axis: " + axis);
    }
    for (const auto& v : j.at("values")) s.values.push_back(detail::number_or_inf(v, "values"));
    if (s.values.empty()) throw InputError("sweep values must be nonempty");
    if (!std::is_sorted(s.values.begin(), s.values.end())) {
      throw InputError("sweep values must be sorted");
    }
    return s;
  } catch (const Json::exception& e) {
    throw InputError(std::string("sweep: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("sweep: ") + e.what());
  }
}

}  // namespace anticonc
