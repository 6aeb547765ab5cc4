#pragma once

// Exact and sampled concentration functions.
//
// Q(F, lambda) = sup_x F(x + lambda B) with B the closed Euclidean ball of
// radius 1/2, so in d = 1 the window is the closed interval [x, x + lambda]
// and in d = 2 a closed disk of radius lambda / 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "anticonc/core.hpp"

namespace anticonc {

// Relative slack on window/disk boundaries so that atoms sitting exactly on
// the boundary in exact arithmetic stay inside after rounding.
inline constexpr double kWindowRelTol = 1e-9;
inline constexpr std::size_t kDefaultDiskAtomCap = 2000;

inline bool within_length(double diff, double len) {
  return diff <= len * (1.0 + kWindowRelTol) + kMergeTol;
}

// Exact law of S_a = sum_k X_k a_k, built by successive convolution with
// merging after each factor.
inline DiscreteDistD weighted_sum_dist(const WeightMatrix& a, const DiscreteDist1D& f,
                                       std::uint64_t cap = kDefaultEnumerationCap) {
  if (!f.is_probability()) throw DomainError("law of X must be a probability law");
  std::uint64_t outcomes = 1;
  for (std::size_t k = 0; k < a.n(); ++k) {
    outcomes *= f.size();
    if (outcomes > cap) {
      throw ResourceError(
          "enumeration of the weighted sum exceeds the cap; use the Monte Carlo path");
    }
  }
  const std::size_t d = a.d();
  std::vector<double> pts(d, 0.0);
  std::vector<double> ms{1.0};
  for (std::size_t k = 0; k < a.n(); ++k) {
    auto row = a.row(k);
    std::vector<double> next_pts;
    std::vector<double> next_ms;
    next_pts.reserve(pts.size() * f.size());
    next_ms.reserve(ms.size() * f.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
      for (std::size_t j = 0; j < f.size(); ++j) {
        double x = f.atoms()[j];
        for (std::size_t c = 0; c < d; ++c) next_pts.push_back(pts[i * d + c] + x * row[c]);
        next_ms.push_back(ms[i] * f.masses()[j]);
      }
    }
    DiscreteDistD merged(d, std::move(next_pts), std::move(next_ms));
    pts.assign(merged.points().begin(), merged.points().end());
    ms.assign(merged.masses().begin(), merged.masses().end());
  }
  return DiscreteDistD(d, std::move(pts), std::move(ms));
}

// Sliding closed window; the supremum is attained with the left endpoint at an
// atom.
inline double q_exact_1d(const DiscreteDist1D& f, double lambda) {
  if (std::isnan(lambda) || lambda < 0.0) throw DomainError("lambda must be >= 0");
  if (std::isinf(lambda)) return f.total_mass();
  auto x = f.atoms();
  auto p = f.masses();
  double best = 0.0, window = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (j < i) {
      j = i;
      window = 0.0;
    }
    while (j < x.size() && within_length(x[j] - x[i], lambda)) window += p[j++];
    best = std::max(best, window);
    window -= p[i];
  }
  return std::min(best, f.total_mass());
}

namespace detail {

inline bool in_disk(double dx, double dy, double r) {
  return std::hypot(dx, dy) <= r * (1.0 + kWindowRelTol) + kMergeTol;
}

}  // namespace detail

// Exact max-coverage by a closed disk of radius lambda / 2. Candidate centers
// are the atoms and, for every pair within one diameter, the two centers of
// circles through both. O(m^3) in the worst case; x-sorting prunes pairs and
// counts.
inline double q_exact_2d(const DiscreteDistD& f, double lambda,
                         std::size_t atom_cap = kDefaultDiskAtomCap) {
  if (f.dim() != 2) throw DimensionError("q_exact_2d needs a two-dimensional law");
  if (std::isnan(lambda) || lambda < 0.0) throw DomainError("lambda must be >= 0");
  if (std::isinf(lambda)) return 1.0;
  if (f.size() > atom_cap) {
    throw ResourceError("too many atoms for exact disk coverage; use Monte Carlo");
  }
  const double r = lambda / 2.0;
  if (r == 0.0) return f.max_mass();

  const std::size_t m = f.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return f.point(i)[0] < f.point(j)[0];
  });
  std::vector<double> xs(m), ys(m), ps(m);
  for (std::size_t k = 0; k < m; ++k) {
    xs[k] = f.point(order[k])[0];
    ys[k] = f.point(order[k])[1];
    ps[k] = f.masses()[order[k]];
  }
  const double reach = r * (1.0 + kWindowRelTol) + kMergeTol;

  auto coverage = [&](double cx, double cy) {
    auto lo = std::lower_bound(xs.begin(), xs.end(), cx - reach) - xs.begin();
    double s = 0.0;
    for (auto k = static_cast<std::size_t>(lo); k < m && xs[k] <= cx + reach; ++k) {
      if (detail::in_disk(xs[k] - cx, ys[k] - cy, r)) s += ps[k];
    }
    return s;
  };

  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    best = std::max(best, coverage(xs[i], ys[i]));
    for (std::size_t j = i + 1; j < m && xs[j] - xs[i] <= 2.0 * reach; ++j) {
      double dx = xs[j] - xs[i], dy = ys[j] - ys[i];
      double dist = std::hypot(dx, dy);
      if (dist == 0.0 || dist > 2.0 * reach) continue;
      double half = dist / 2.0;
      double off = std::sqrt(std::max(0.0, r * r - half * half));
      double mx = xs[i] + dx / 2.0, my = ys[i] + dy / 2.0;
      double ux = -dy / dist, uy = dx / dist;
      best = std::max(best, coverage(mx + off * ux, my + off * uy));
      best = std::max(best, coverage(mx - off * ux, my - off * uy));
    }
  }
  return std::min(best, 1.0);
}

// Dispatches on dimension; d >= 3 has no exact path.
inline double q_exact(const DiscreteDistD& f, double lambda,
                      std::size_t atom_cap_2d = kDefaultDiskAtomCap) {
  switch (f.dim()) {
    case 1:
      return q_exact_1d(f.to_1d(), lambda);
    case 2:
      return q_exact_2d(f, lambda, atom_cap_2d);
    default:
      throw DimensionError("exact Q is only available for d <= 2");
  }
}

struct SampleBatch {
  std::size_t dim = 1;
  std::vector<double> points;  // row-major, count x dim
  std::uint64_t seed = 0;
  std::size_t count = 0;

  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * dim, dim);
  }
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t draw_index(std::span<const double> cumulative, std::mt19937_64& rng) {
  double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto k = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(k, cumulative.size() - 1);
}

}  // namespace detail

// Direct Monte Carlo draws of S_a, independent of the enumeration path.
inline SampleBatch sample_weighted_sum(const WeightMatrix& a, const DiscreteDist1D& f,
                                       std::size_t count, std::uint64_t seed) {
  SampleBatch b{a.d(), std::vector<double>(count * a.d(), 0.0), seed, count};
  std::vector<double> cum(f.size());
  std::partial_sum(f.masses().begin(), f.masses().end(), cum.begin());
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < count; ++s) {
    double* out = b.points.data() + s * a.d();
    for (std::size_t k = 0; k < a.n(); ++k) {
      double x = f.atoms()[detail::draw_index(cum, rng)];
      auto row = a.row(k);
      for (std::size_t c = 0; c < a.d(); ++c) out[c] += x * row[c];
    }
  }
  return b;
}

// Draws from H_1^lambda: compound Poisson with Levy measure
// (lambda / 4) * sum_k (E_{a_k} + E_{-a_k}), i.e. Poisson(lambda n / 2) jumps
// chosen uniformly among the 2n points +-a_k.
inline SampleBatch sample_H(const WeightMatrix& a, double lambda_exp, std::size_t count,
                            std::uint64_t seed) {
  if (std::isnan(lambda_exp) || lambda_exp < 0.0) {
    throw DomainError("lambda_exp must be >= 0");
  }
  SampleBatch b{a.d(), std::vector<double>(count * a.d(), 0.0), seed, count};
  const double rate = lambda_exp * static_cast<double>(a.n()) / 2.0;
  if (rate == 0.0) return b;
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long> jumps(rate);
  const auto two_n = static_cast<std::uint64_t>(2 * a.n());
  for (std::size_t s = 0; s < count; ++s) {
    double* out = b.points.data() + s * a.d();
    long nj = jumps(rng);
    for (long j = 0; j < nj; ++j) {
      std::uint64_t pick = rng() % two_n;
      auto row = a.row(pick / 2);
      double sign = (pick % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t c = 0; c < a.d(); ++c) out[c] += sign * row[c];
    }
  }
  return b;
}

inline SampleBatch scaled(const SampleBatch& b, double z) {
  SampleBatch out = b;
  for (double& x : out.points) x *= z;
  return out;
}

inline void write_csv(std::ostream& os, const SampleBatch& b) {
  for (std::size_t c = 0; c < b.dim; ++c) os << (c ? "," : "") << 'x' << (c + 1);
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < b.count; ++i) {
    auto p = b.point(i);
    for (std::size_t c = 0; c < b.dim; ++c) os << (c ? "," : "") << p[c];
    os << '\n';
  }
}

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

namespace detail {

inline constexpr int kBootstrapReplicates = 200;

// Bootstrap standard error of a fixed-window fraction: resampling the
// evaluation half with replacement makes the window count Binomial(N, p_hat).
inline double bootstrap_fraction_se(std::size_t hits, std::size_t total,
                                    std::uint64_t seed) {
  if (total == 0) return 0.0;
  double p = static_cast<double>(hits) / static_cast<double>(total);
  if (p <= 0.0 || p >= 1.0) return 0.0;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::binomial_distribution<std::size_t> draw(total, p);
  double mean = 0.0, m2 = 0.0;
  for (int b = 1; b <= kBootstrapReplicates; ++b) {
    double v = static_cast<double>(draw(rng)) / static_cast<double>(total);
    double delta = v - mean;
    mean += delta / b;
    m2 += delta * (v - mean);
  }
  return std::sqrt(m2 / (kBootstrapReplicates - 1));
}

struct Grid2D {
  double cell;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;

  static std::int64_t key(std::int64_t i, std::int64_t j) {
    return (i << 32) ^ (j & 0xffffffffLL);
  }
  std::int64_t cell_of(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell));
  }
};

}  // namespace detail

// Cross-fitted estimate: the best window is chosen on the even-indexed
// samples and its mass is measured on the odd-indexed ones. The chosen
// window's true mass is at most Q, so the estimate is biased downward only.
inline McEstimate q_monte_carlo(const SampleBatch& batch, double lambda) {
  if (batch.count < 1000) throw DomainError("Monte Carlo Q needs at least 1000 samples");
  if (std::isnan(lambda) || lambda < 0.0) throw DomainError("lambda must be >= 0");
  if (batch.dim > 2) throw DimensionError("Monte Carlo Q supports d <= 2");
  if (std::isinf(lambda)) return {1.0, 0.0};

  const std::size_t n_eval = batch.count / 2;
  if (batch.dim == 1) {
    std::vector<double> sel, eval;
    sel.reserve(batch.count - n_eval);
    eval.reserve(n_eval);
    for (std::size_t i = 0; i < batch.count; ++i) {
      (i % 2 == 0 ? sel : eval).push_back(batch.points[i]);
    }
    std::sort(sel.begin(), sel.end());
    std::size_t best = 0, j = 0;
    double left = sel.front();
    for (std::size_t i = 0; i < sel.size(); ++i) {
      if (j < i) j = i;
      while (j < sel.size() && within_length(sel[j] - sel[i], lambda)) ++j;
      if (j - i > best) {
        best = j - i;
        left = sel[i];
      }
    }
    std::size_t hits = 0;
    for (double x : eval) {
      double diff = x - left;
      if (diff >= -kMergeTol && within_length(diff, lambda)) ++hits;
    }
    double est = static_cast<double>(hits) / static_cast<double>(n_eval);
    return {est, detail::bootstrap_fraction_se(hits, n_eval, batch.seed)};
  }

  // d = 2: selection samples are collapsed to distinct points with counts.
  // Candidate centers are the first distinct points in sample order plus the
  // two-point circle centers among a smaller prefix of them.
  const double r = lambda / 2.0;
  std::map<std::pair<double, double>, std::size_t> counts;
  std::vector<std::pair<double, double>> distinct;
  for (std::size_t i = 0; i < batch.count; i += 2) {
    auto p = batch.point(i);
    auto [it, fresh] = counts.try_emplace({p[0], p[1]}, 0);
    ++it->second;
    if (fresh) distinct.push_back(it->first);
  }

  detail::Grid2D grid{r > 0.0 ? 2.0 * r : 1e-9, {}};
  std::vector<std::size_t> weight(distinct.size());
  for (std::size_t u = 0; u < distinct.size(); ++u) {
    const auto& p = distinct[u];
    weight[u] = counts[p];
    grid.buckets[detail::Grid2D::key(grid.cell_of(p.first), grid.cell_of(p.second))].push_back(u);
  }
  auto count_sel = [&](double cx, double cy) {
    std::size_t c = 0;
    std::int64_t gi = grid.cell_of(cx), gj = grid.cell_of(cy);
    for (std::int64_t di = -1; di <= 1; ++di) {
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        auto it = grid.buckets.find(detail::Grid2D::key(gi + di, gj + dj));
        if (it == grid.buckets.end()) continue;
        for (std::size_t u : it->second) {
          const auto& p = distinct[u];
          if (detail::in_disk(p.first - cx, p.second - cy, r)) c += weight[u];
        }
      }
    }
    return c;
  };

  std::vector<std::pair<double, double>> centers;
  const std::size_t n_single = std::min<std::size_t>(distinct.size(), 512);
  const std::size_t n_pair = std::min<std::size_t>(distinct.size(), 48);
  for (std::size_t k = 0; k < n_single; ++k) centers.push_back(distinct[k]);
  if (r > 0.0) {
    for (std::size_t u = 0; u < n_pair; ++u) {
      for (std::size_t v = u + 1; v < n_pair; ++v) {
        const auto& p = distinct[u];
        const auto& q = distinct[v];
        double dx = q.first - p.first, dy = q.second - p.second;
        double dist = std::hypot(dx, dy);
        if (dist == 0.0 || dist > 2.0 * r) continue;
        double off = std::sqrt(std::max(0.0, r * r - dist * dist / 4.0));
        double mx = p.first + dx / 2.0, my = p.second + dy / 2.0;
        centers.emplace_back(mx - off * dy / dist, my + off * dx / dist);
        centers.emplace_back(mx + off * dy / dist, my - off * dx / dist);
      }
    }
  }
  std::size_t best = 0;
  std::pair<double, double> best_c = centers.front();
  for (const auto& c : centers) {
    std::size_t k = count_sel(c.first, c.second);
    if (k > best) {
      best = k;
      best_c = c;
    }
  }
  std::size_t hits = 0;
  for (std::size_t i = 1; i < batch.count; i += 2) {
    auto p = batch.point(i);
    if (detail::in_disk(p[0] - best_c.first, p[1] - best_c.second, r)) ++hits;
  }
  double est = static_cast<double>(hits) / static_cast<double>(n_eval);
  return {est, detail::bootstrap_fraction_se(hits, n_eval, batch.seed)};
}

}  // namespace anticonc
