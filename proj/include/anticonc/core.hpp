#pragma once

// Discrete laws, weight matrices and the scalar helpers every other module
// builds on. All types are immutable after construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "anticonc/error.hpp"

namespace anticonc {

inline constexpr double kMergeTol = 1e-12;
inline constexpr double kMassTol = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void check_masses(std::span<const double> masses) {
  for (double m : masses) {
    if (!std::isfinite(m) || m < 0.0) {
      throw DomainError("masses must be finite and nonnegative");
    }
  }
}

// Allowed deviation of a summed probability from 1: kMassTol plus the
// rounding of `count` additions.
inline double sum_tolerance(std::size_t count) {
  return kMassTol + 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(count);
}

inline void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DomainError(std::string(what) + " must be finite");
    }
  }
}

}  // namespace detail

// Finite discrete measure on the real line. Probability laws have total mass
// exactly 1; sub-probability measures keep their total explicitly.
class DiscreteDist1D {
 public:
  DiscreteDist1D() : atoms_{0.0}, masses_{1.0}, total_(1.0) {}

  // Probability law. The masses must sum to 1 within kMassTol and are then
  // rescaled so that the sum is 1 up to rounding.
  static DiscreteDist1D probability(std::vector<double> atoms,
                                    std::vector<double> masses) {
    DiscreteDist1D d = build(std::move(atoms), std::move(masses));
    if (std::abs(d.total_ - 1.0) > detail::sum_tolerance(d.masses_.size())) {
      std::ostringstream os;
      os.precision(17);
      os << "probability masses sum to " << d.total_ << ", not 1";
      throw DomainError(os.str());
    }
    for (double& m : d.masses_) m /= d.total_;
    d.total_ = 1.0;
    return d;
  }

  // Like probability() but rescales any positive total to 1.
  static DiscreteDist1D normalized(std::vector<double> atoms,
                                   std::vector<double> masses) {
    DiscreteDist1D d = build(std::move(atoms), std::move(masses));
    if (d.total_ <= 0.0) throw DomainError("cannot normalize a zero measure");
    for (double& m : d.masses_) m /= d.total_;
    d.total_ = 1.0;
    return d;
  }

  // Measure with total mass in [0, 1]; an empty measure is allowed.
  static DiscreteDist1D measure(std::vector<double> atoms,
                                std::vector<double> masses) {
    DiscreteDist1D d = build(std::move(atoms), std::move(masses));
    if (d.total_ > 1.0 + kMassTol) {
      throw DomainError("sub-probability measure has total mass above 1");
    }
    return d;
  }

  static DiscreteDist1D point_mass(double x) {
    return probability({x}, {1.0});
  }

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> masses() const { return masses_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double total_mass() const { return total_; }
  bool is_probability() const { return std::abs(total_ - 1.0) <= kMassTol; }

  // Mass of the atom within kMergeTol of x, or 0.
  double mass_at(double x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x - kMergeTol);
    if (it != atoms_.end() && std::abs(*it - x) <= kMergeTol) {
      return masses_[static_cast<std::size_t>(it - atoms_.begin())];
    }
    return 0.0;
  }

  double max_mass() const {
    return masses_.empty() ? 0.0
                           : *std::max_element(masses_.begin(), masses_.end());
  }

  DiscreteDist1D scaled_mass(double factor) const {
    DiscreteDist1D d = *this;
    for (double& m : d.masses_) m *= factor;
    d.total_ *= factor;
    return d;
  }

 private:
  static DiscreteDist1D build(std::vector<double> atoms,
                              std::vector<double> masses) {
    if (atoms.size() != masses.size()) {
      throw DomainError("atoms and masses differ in length");
    }
    detail::check_finite(atoms, "atoms");
    detail::check_masses(masses);

    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });

    DiscreteDist1D d;
    d.atoms_.clear();
    d.masses_.clear();
    // Chained merge: consecutive sorted atoms within kMergeTol join a group,
    // whose position is the mass-weighted mean (the atom itself when all
    // members coincide).
    double group_mass = 0.0, group_moment = 0.0, last = 0.0, first = 0.0;
    bool open = false, same = true;
    auto flush = [&] {
      if (open && group_mass > 0.0) {
        d.atoms_.push_back(same ? first : group_moment / group_mass);
        d.masses_.push_back(group_mass);
      }
      group_mass = group_moment = 0.0;
      open = false;
      same = true;
    };
    for (std::size_t idx : order) {
      double x = atoms[idx];
      double m = masses[idx];
      if (m == 0.0) continue;
      if (open && x - last > kMergeTol) flush();
      if (!open) first = x;
      same = same && x == first;
      group_mass += m;
      group_moment += m * x;
      last = x;
      open = true;
    }
    flush();
    d.total_ = std::accumulate(d.masses_.begin(), d.masses_.end(), 0.0);
    return d;
  }

  std::vector<double> atoms_;
  std::vector<double> masses_;
  double total_;
};

// Finite probability law on R^d, points stored row-major.
class DiscreteDistD {
 public:
  DiscreteDistD(std::size_t dim, std::vector<double> points,
                std::vector<double> masses)
      : dim_(dim) {
    if (dim == 0) throw DimensionError("dimension must be at least 1");
    if (points.size() != masses.size() * dim) {
      throw DomainError("point buffer does not match masses and dimension");
    }
    detail::check_finite(points, "points");
    detail::check_masses(masses);
    merge(points, masses);
    double total = std::accumulate(masses_.begin(), masses_.end(), 0.0);
    if (std::abs(total - 1.0) > detail::sum_tolerance(masses_.size())) {
      std::ostringstream os;
      os.precision(17);
      os << "probability masses sum to " << total << ", not 1";
      throw DomainError(os.str());
    }
    for (double& m : masses_) m /= total;
  }

  static DiscreteDistD from_1d(const DiscreteDist1D& f) {
    return DiscreteDistD(1, {f.atoms().begin(), f.atoms().end()},
                         {f.masses().begin(), f.masses().end()});
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return masses_.size(); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points_).subspan(i * dim_, dim_);
  }
  std::span<const double> points() const { return points_; }
  std::span<const double> masses() const { return masses_; }
  double max_mass() const {
    return *std::max_element(masses_.begin(), masses_.end());
  }

  DiscreteDist1D to_1d() const {
    if (dim_ != 1) throw DimensionError("law is not one-dimensional");
    return DiscreteDist1D::probability(points_, masses_);
  }

 private:
  // Groups points whose coordinates chain within kMergeTol axis by axis,
  // which merges every pair within kMergeTol in max-norm.
  void merge(const std::vector<double>& pts, const std::vector<double>& ms) {
    std::vector<std::size_t> idx;
    idx.reserve(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (ms[i] > 0.0) idx.push_back(i);
    }
    std::vector<std::vector<std::size_t>> groups;
    split(pts, idx, 0, groups);

    std::vector<std::pair<std::vector<double>, double>> merged;
    merged.reserve(groups.size());
    for (const auto& g : groups) {
      std::vector<double> pos(dim_, 0.0);
      double mass = 0.0;
      for (std::size_t i : g) {
        mass += ms[i];
        for (std::size_t c = 0; c < dim_; ++c) pos[c] += ms[i] * pts[i * dim_ + c];
      }
      for (double& c : pos) c /= mass;
      merged.emplace_back(std::move(pos), mass);
    }
    std::sort(merged.begin(), merged.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    points_.reserve(merged.size() * dim_);
    masses_.reserve(merged.size());
    for (auto& [pos, mass] : merged) {
      points_.insert(points_.end(), pos.begin(), pos.end());
      masses_.push_back(mass);
    }
  }

  void split(const std::vector<double>& pts, std::vector<std::size_t> idx,
             std::size_t axis,
             std::vector<std::vector<std::size_t>>& out) const {
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
      return pts[i * dim_ + axis] < pts[j * dim_ + axis];
    });
    std::size_t start = 0;
    for (std::size_t k = 1; k <= idx.size(); ++k) {
      bool boundary = k == idx.size() ||
                      pts[idx[k] * dim_ + axis] - pts[idx[k - 1] * dim_ + axis] >
                          kMergeTol;
      if (!boundary) continue;
      std::vector<std::size_t> chain(idx.begin() + static_cast<long>(start),
                                     idx.begin() + static_cast<long>(k));
      if (axis + 1 == dim_ || chain.size() == 1) {
        out.push_back(std::move(chain));
      } else {
        split(pts, std::move(chain), axis + 1, out);
      }
      start = k;
    }
  }

  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> masses_;
};

// Coefficient vectors a_1..a_n in R^d, row-major.
class WeightMatrix {
 public:
  WeightMatrix(std::size_t n, std::size_t d, std::vector<double> entries)
      : n_(n), d_(d), entries_(std::move(entries)) {
    if (n == 0 || d == 0) throw DomainError("weight matrix needs n, d >= 1");
    if (entries_.size() != n * d) {
      throw DomainError("weight entries do not match n x d");
    }
    detail::check_finite(entries_, "weights");
  }

  static WeightMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DomainError("weight matrix needs n >= 1");
    std::size_t d = rows.front().size();
    std::vector<double> e;
    for (const auto& r : rows) {
      if (r.size() != d) throw DomainError("weight rows differ in length");
      e.insert(e.end(), r.begin(), r.end());
    }
    return WeightMatrix(rows.size(), d, std::move(e));
  }

  // n weights in d = 1.
  static WeightMatrix scalars(std::vector<double> w) {
    std::size_t n = w.size();
    return WeightMatrix(n, 1, std::move(w));
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }
  std::span<const double> row(std::size_t k) const {
    return std::span<const double>(entries_).subspan(k * d_, d_);
  }
  double operator()(std::size_t k, std::size_t j) const {
    return entries_[k * d_ + j];
  }
  std::span<const double> entries() const { return entries_; }

  WeightMatrix scaled(double gamma) const {
    std::vector<double> e = entries_;
    for (double& x : e) x *= gamma;
    return WeightMatrix(n_, d_, std::move(e));
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> entries_;
};

enum class QuadratureRule { trapezoid, gauss_legendre_composite };

// Cube-integration settings. The trapezoid rule is refined with per-axis
// Richardson extrapolation, i.e. composite Simpson on the doubled grid.
struct QuadratureSpec {
  std::size_t nodes_per_axis = 513;
  int max_refinements = 6;
  double rel_tol = 1e-6;
  QuadratureRule rule = QuadratureRule::trapezoid;

  void validate() const {
    if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0) {
      throw DomainError("nodes_per_axis must be odd and at least 3");
    }
    if (!(rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
    if (max_refinements < 0) {
      throw DomainError("max_refinements must be nonnegative");
    }
  }
};

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

struct Scenario {
  std::string id;
  WeightMatrix weights = WeightMatrix::scalars({1.0});
  DiscreteDist1D law_x;
  double tau = 0.0;  // may be kInf
  double epsilon = 1.0;
  QuadratureSpec quadrature;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  std::uint64_t seed = 1;
  std::size_t mc_samples = 1'000'000;

  std::size_t d() const { return weights.d(); }
  std::size_t n() const { return weights.n(); }

  void validate() const {
    if (std::isnan(tau) || tau < 0.0) throw DomainError("tau must be >= 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw DomainError("epsilon must be positive and finite");
    }
    if (enumeration_cap == 0) throw DomainError("enumeration_cap must be >= 1");
    if (!law_x.is_probability()) throw DomainError("law_x must be a probability law");
    quadrature.validate();
  }
};

// Largest integer k with k < x. Differs from std::floor at integers.
inline std::int64_t strict_floor(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("strict_floor needs a positive finite argument");
  }
  double f = std::floor(x);
  auto k = static_cast<std::int64_t>(f);
  return f == x ? k - 1 : k;
}

// Law of X1 - X2 for independent X1, X2 ~ f. The result is exactly symmetric:
// the positive half is built once and mirrored.
inline DiscreteDist1D symmetrize(const DiscreteDist1D& f) {
  if (!f.is_probability()) throw DomainError("symmetrize needs a probability law");
  auto x = f.atoms();
  auto p = f.masses();
  double zero = 0.0;
  for (double m : p) zero += m * m;

  std::vector<double> pos_atoms, pos_masses;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double diff = x[j] - x[i];
      if (diff <= kMergeTol) {
        zero += 2.0 * p[i] * p[j];
      } else {
        pos_atoms.push_back(diff);
        pos_masses.push_back(p[i] * p[j]);
      }
    }
  }
  DiscreteDist1D half = DiscreteDist1D::measure(pos_atoms, pos_masses);

  std::vector<double> atoms, masses;
  atoms.reserve(2 * half.size() + 1);
  masses.reserve(2 * half.size() + 1);
  for (std::size_t i = half.size(); i-- > 0;) {
    atoms.push_back(-half.atoms()[i]);
    masses.push_back(half.masses()[i]);
  }
  atoms.push_back(0.0);
  masses.push_back(zero);
  for (std::size_t i = 0; i < half.size(); ++i) {
    atoms.push_back(half.atoms()[i]);
    masses.push_back(half.masses()[i]);
  }
  return DiscreteDist1D::probability(std::move(atoms), std::move(masses));
}

// Mass of atoms z with |z| > delta (strict).
inline double tail_mass(const DiscreteDist1D& g, double delta) {
  if (std::isnan(delta) || delta < 0.0) {
    throw DomainError("tail_mass needs delta >= 0");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.atoms()[i]) > delta) s += g.masses()[i];
  }
  return s;
}

struct TailSplit {
  double p1 = 0.0;
  std::optional<DiscreteDist1D> g1;  // absent when p1 == 0
};

// Splits g into its part outside [-threshold, threshold], returned as the
// conditional law given |z| > threshold.
inline TailSplit restrict_and_normalize(const DiscreteDist1D& g, double threshold) {
  TailSplit out;
  out.p1 = tail_mass(g, threshold);
  if (out.p1 <= 0.0) return out;
  std::vector<double> atoms, masses;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.atoms()[i]) > threshold) {
      atoms.push_back(g.atoms()[i]);
      masses.push_back(g.masses()[i]);
    }
  }
  out.g1 = DiscreteDist1D::normalized(std::move(atoms), std::move(masses));
  return out;
}

}  // namespace anticonc
