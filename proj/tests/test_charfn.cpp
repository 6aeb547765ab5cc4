#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "anticonc/charfn.hpp"
#include "anticonc/exact.hpp"

using namespace anticonc;

namespace {

const QuadratureSpec kSpec{};

DiscreteDist1D rademacher() { return DiscreteDist1D::probability({-1.0, 1.0}, {0.5, 0.5}); }

double binom_central(int n) {
  double c = 1.0;
  for (int i = 1; i <= n / 2; ++i) c = c * (n - n / 2 + i) / i;
  return c / std::ldexp(1.0, n);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(CfX, Examples) {
  auto r = rademacher();
  EXPECT_NEAR(cf_X(r, std::numbers::pi).real(), -1.0, 1e-15);
  EXPECT_NEAR(cf_X(r, 0.7).real(), std::cos(0.7), 1e-15);
  EXPECT_NEAR(cf_X(r, 0.7).imag(), 0.0, 1e-15);
  auto f = DiscreteDist1D::probability({0.0, 2.0, 5.0}, {0.2, 0.3, 0.5});
  EXPECT_DOUBLE_EQ(cf_X(f, 0.0).real(), 1.0);
  auto point = DiscreteDist1D::point_mass(0.0);
  EXPECT_DOUBLE_EQ(cf_X(point, 123.4).real(), 1.0);
}

TEST(CfX, SymmetrizationIdentity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x, p;
    for (std::size_t j = 0; j < 1 + rng() % 6; ++j) {
      x.push_back(u(rng));
      p.push_back(u(rng) + 3.1);
    }
    auto f = DiscreteDist1D::normalized(x, p);
    auto g = symmetrize(f);
    for (int k = 0; k < 20; ++k) {
      double s = 4.0 * u(rng);
      Complex cg = cf_X(g, s);
      EXPECT_NEAR(std::norm(cf_X(f, s)), cg.real(), 1e-10);
      EXPECT_NEAR(cg.imag(), 0.0, 1e-10);
    }
  }
}

TEST(CfFa, Examples) {
  auto r = rademacher();
  auto a2 = WeightMatrix::from_rows({{1.0, 0.0}});
  std::vector<double> zero{0.0, 0.0}, t{std::numbers::pi, 0.0};
  EXPECT_DOUBLE_EQ(cf_Fa(a2, r, zero).real(), 1.0);
  EXPECT_NEAR(cf_Fa(a2, r, t).real(), -1.0, 1e-15);
  auto ones = WeightMatrix::scalars({1.0, 1.0});
  std::vector<double> half{std::numbers::pi / 2};
  EXPECT_NEAR(std::abs(cf_Fa(ones, r, half)), 0.0, 1e-15);
  EXPECT_THROW(cf_Fa(ones, r, zero), DomainError);
}

TEST(CfFa, MatchesEnumeratedLaw) {
  auto f = DiscreteDist1D::probability({-1.0, 0.5, 2.0}, {0.3, 0.3, 0.4});
  auto a = WeightMatrix::from_rows({{1.0, 0.2}, {-0.5, 1.0}, {0.3, 0.3}});
  auto s = weighted_sum_dist(a, f);
  std::vector<double> t{0.7, -1.3};
  Complex direct{0.0, 0.0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    double phase = dot(t, s.point(i));
    direct += s.masses()[i] * Complex(std::cos(phase), std::sin(phase));
  }
  EXPECT_NEAR(std::abs(cf_Fa(a, f, t) - direct), 0.0, 1e-14);
}

TEST(CfH, Examples) {
  auto a = WeightMatrix::scalars({1.0});
  std::vector<double> zero{0.0}, pi{std::numbers::pi};
  EXPECT_DOUBLE_EQ(cf_H(a, 1.0, 2.0, zero), 1.0);
  EXPECT_NEAR(cf_H(a, 1.0, 2.0, pi), std::exp(-2.0), 1e-15);
  EXPECT_DOUBLE_EQ(cf_H(a, 0.0, 2.0, pi), 1.0);
  EXPECT_DOUBLE_EQ(cf_H(a, 1.0, 0.0, pi), 1.0);
  EXPECT_THROW(cf_H(a, 1.0, -1.0, pi), DomainError);
}

TEST(CfH, NonIncreasingInLambda) {
  auto a = WeightMatrix::scalars({1.0, 0.3, 2.5});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> t{u(rng)};
    double prev = 1.0;
    for (double lambda = 0.0; lambda <= 4.0; lambda += 0.25) {
      double v = cf_H(a, 1.3, lambda, t);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(RealGcd, Lattices) {
  std::vector<double> v{0.5, 1.5, 2.0};
  ASSERT_TRUE(detail::real_gcd(v).has_value());
  EXPECT_NEAR(*detail::real_gcd(v), 0.5, 1e-15);
  std::vector<double> w{1.0, std::sqrt(2.0)};
  EXPECT_FALSE(detail::real_gcd(w).has_value());
  std::vector<double> third{1.0 / 3.0, 1.0};
  EXPECT_NEAR(*detail::real_gcd(third), 1.0 / 3.0, 1e-15);
}

TEST(CubeIntegral, Examples) {
  auto one = cf_handle_constant(1);
  auto r1 = cube_integral(one, 2.0, kSpec);
  EXPECT_NEAR(r1.value, 1.0, 1e-14);
  EXPECT_TRUE(r1.converged);
  EXPECT_NEAR(cube_integral(cf_handle_constant(2), 1.0, kSpec).value, 4.0, 1e-13);
  auto c = cf_handle(1, [](std::span<const double> t) { return Complex{std::cos(t[0]), 0.0}; },
                     false, {1.0});
  auto r = cube_integral(c, 1.0, kSpec);
  EXPECT_NEAR(r.value, 2.0 * std::sin(1.0), 1e-6 * 2.0 * std::sin(1.0));
  EXPECT_TRUE(r.converged);
  EXPECT_THROW(cube_integral(c, 0.0, kSpec), DomainError);
}

TEST(CubeIntegral, GaussLegendreAgreesWithTrapezoid) {
  auto a = WeightMatrix::from_rows({{1.0, 0.5}, {-0.3, 1.2}, {0.8, 0.8}});
  auto h = cf_handle_H(a, 1.0, 1.5);
  QuadratureSpec gl;
  gl.rule = QuadratureRule::gauss_legendre_composite;
  auto rt = cube_integral(h, 0.4, kSpec);
  auto rg = cube_integral(h, 0.4, gl);
  EXPECT_TRUE(rt.converged);
  EXPECT_TRUE(rg.converged);
  EXPECT_NEAR(rt.value, rg.value, 1e-6 * rt.value);
}

TEST(CubeIntegral, GaussianClosedForm2D) {
  // exp(-(t1^2 + t2^2) / 2) over [-2, 2]^2.
  auto g = cf_handle(
      2, [](std::span<const double> t) { return Complex{std::exp(-0.5 * (t[0] * t[0] + t[1] * t[1])), 0.0}; },
      true, {2.0, 2.0});
  double side = std::sqrt(2.0 * std::numbers::pi) * (2.0 * normal_cdf(2.0) - 1.0);
  auto r = cube_integral(g, 0.5, kSpec);
  EXPECT_NEAR(r.value, side * side, 1e-6 * side * side);
}

TEST(Esseen, Examples) {
  EXPECT_NEAR(esseen_upper(cf_handle_constant(1), 0.3, kSpec).value, 2.0, 1e-13);
  EXPECT_NEAR(esseen_upper(cf_handle_constant(2), 1.0, kSpec).value, 4.0, 1e-13);
  auto h = cf_handle_Fa(WeightMatrix::scalars({1.0}), rademacher());
  EXPECT_NEAR(esseen_upper(h, 1.0, kSpec).value, 2.0 * std::sin(1.0), 1e-6);
}

TEST(Esseen, TauLimits) {
  auto h = cf_handle_Fa(WeightMatrix::scalars({1.0, 2.0}), rademacher());
  auto inf = esseen_upper(h, kInf, kSpec);
  EXPECT_DOUBLE_EQ(inf.value, 2.0);
  EXPECT_TRUE(inf.converged);
  for (int n : {2, 4, 8, 12}) {
    auto hn = cf_handle_Fa(WeightMatrix::scalars(std::vector<double>(n, 1.0)), rademacher());
    EXPECT_NEAR(esseen_upper(hn, 0.0, kSpec).value, 2.0 * binom_central(n), 1e-9) << n;
  }
  auto irrational = DiscreteDist1D::probability({0.0, 1.0, std::sqrt(2.0)}, {0.3, 0.3, 0.4});
  EXPECT_THROW(esseen_upper(cf_handle_Fa(WeightMatrix::scalars({1.0}), irrational), 0.0, kSpec),
               DomainError);
}

TEST(Esseen, ScaleCovariance) {
  auto f = DiscreteDist1D::probability({-1.0, 0.5, 2.0}, {0.3, 0.3, 0.4});
  auto a = WeightMatrix::from_rows({{1.0, 0.2}, {-0.5, 1.0}, {0.3, 0.3}});
  double base = esseen_upper(cf_handle_Fa(a, f), 0.7, kSpec).value;
  for (double gamma : {0.1, 3.0}) {
    double v = esseen_upper(cf_handle_Fa(a.scaled(gamma), f), 0.7 * gamma, kSpec).value;
    EXPECT_NEAR(v, base, 1e-6 * base);
  }
}

TEST(Proxy, Examples) {
  EXPECT_NEAR(q_proxy_symmetric(cf_handle_constant(1), 1.0, kSpec).value, 2.0, 1e-13);
  auto h = cf_handle_H(WeightMatrix::scalars(std::vector<double>(5, 1.0)), 1.0, 1.0);
  double v = q_proxy_symmetric(h, 1.0, kSpec).value;
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 2.0);
  auto normal = cf_handle(1, [](std::span<const double> t) { return Complex{std::exp(-0.5 * t[0] * t[0]), 0.0}; },
                          true, {2.0});
  double proxy = q_proxy_symmetric(normal, 1.0, kSpec).value;
  EXPECT_NEAR(proxy, 1.7112, 1e-4);
  double q = 2.0 * normal_cdf(0.5) - 1.0;
  EXPECT_NEAR(q, 0.3829, 1e-4);
  EXPECT_GE(proxy / q, 1.0);
  EXPECT_LE(proxy / q, 5.0);
  auto asym = cf_handle_Fa(WeightMatrix::scalars({1.0}), rademacher());
  EXPECT_THROW(q_proxy_symmetric(asym, 1.0, kSpec), ContractError);
}

TEST(QH, Examples) {
  auto a = WeightMatrix::scalars(std::vector<double>(10, 1.0));
  EXPECT_EQ(q_H(a, 1.0, kInf, kSpec), 1.0);
  EXPECT_EQ(q_H(a, 0.0, 0.5, kSpec), 1.0);
  EXPECT_NEAR(q_H_detail(a, 0.0, 0.5, kSpec).value, 2.0, 1e-13);
  auto a2 = WeightMatrix::from_rows({{1.0, 0.0}});
  EXPECT_NEAR(q_H_detail(a2, 0.0, 0.5, kSpec).value, 4.0, 1e-12);
}

TEST(QH, AgreesWithSampledHWithinFactorFour) {
  auto a = WeightMatrix::scalars(std::vector<double>(10, 1.0));
  double proxy = q_H(a, 1.0, 1.0, kSpec);
  auto mc = q_monte_carlo(sample_H(a, 1.0, 400'000, 11), 1.0);
  EXPECT_GE(proxy / mc.estimate, 0.25);
  EXPECT_LE(proxy / mc.estimate, 4.0);
}

TEST(QH, PreClampMonotoneInLambda) {
  auto a = WeightMatrix::from_rows({{1.0}, {0.5}, {2.0}, {3.0}});
  for (double radius : {0.1, 0.5, 2.0}) {
    double prev = kInf;
    for (int k = 0; k < 20; ++k) {
      double lambda = 0.1 * k;
      double v = q_H_detail(a, lambda, radius, kSpec).value;
      EXPECT_LE(v, prev * (1.0 + 1e-9));
      prev = v;
    }
  }
}

TEST(Quadrature, DoublingChangesLessThanTolerance) {
  auto r = rademacher();
  auto a = WeightMatrix::scalars({1.0, 2.0, 3.0, 5.0, 8.0});
  for (double tau : {0.05, 0.3, 1.0, 3.0}) {
    auto res = esseen_upper(cf_handle_Fa(a, r), tau, kSpec);
    EXPECT_TRUE(res.converged) << tau;
    EXPECT_LE(res.est_error, kSpec.rel_tol * res.value);
  }
}

TEST(Quadrature, ConstantAxisUsesFewNodes) {
  auto a = WeightMatrix::from_rows({{1.0, 0.0}, {2.0, 0.0}});
  auto h = cf_handle_Fa(a, rademacher());
  auto two = esseen_upper(h, 0.5, kSpec);
  auto one = esseen_upper(cf_handle_Fa(WeightMatrix::scalars({1.0, 2.0}), rademacher()), 0.5, kSpec);
  EXPECT_NEAR(two.value, 2.0 * one.value, 1e-9 * one.value);
}
