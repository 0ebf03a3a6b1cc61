#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "support/oracles.hpp"
#include "toruslab/inequalities.hpp"
#include "toruslab/weights.hpp"

namespace toruslab {
namespace {

constexpr double pi = std::numbers::pi;

std::vector<cplx> random_coeffs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> c(n);
  for (auto& v : c) {
    const double re = g(rng);
    v = {re, g(rng)};
  }
  return c;
}

TEST(LatticeCircle, SmallRadii) {
  EXPECT_EQ(lattice_circle(0).count(), 1u);
  EXPECT_EQ(lattice_circle(1).count(), 4u);
  EXPECT_EQ(lattice_circle(3).count(), 0u);
  const auto c = lattice_circle(25);
  std::set<std::pair<int, int>> got;
  for (auto p : c.points) got.insert({p.m, p.n});
  const std::set<std::pair<int, int>> expect{{5, 0},  {-5, 0}, {0, 5},  {0, -5},  {3, 4},  {3, -4},
                                             {-3, 4}, {-3, -4}, {4, 3}, {4, -3}, {-4, 3}, {-4, -3}};
  EXPECT_EQ(got, expect);
  EXPECT_THROW(lattice_circle(-1), DomainError);
}

TEST(LatticeCircle, SymmetricAndCountsMatchQLoopAndDivisorFormula) {
  for (long lam = 0; lam <= 600; ++lam) {
    const auto c = lattice_circle(lam);
    std::set<std::pair<int, int>> pts;
    for (auto p : c.points) {
      EXPECT_EQ(static_cast<long>(p.m) * p.m + static_cast<long>(p.n) * p.n, lam);
      pts.insert({p.m, p.n});
    }
    for (auto [p, q] : pts) {
      for (auto s : {std::pair{p, -q}, std::pair{-p, q}, std::pair{-p, -q}, std::pair{q, p},
                     std::pair{-q, p}, std::pair{q, -p}, std::pair{-q, -p}}) {
        EXPECT_TRUE(pts.count(s)) << lam;
      }
    }
    long by_q = 0;
    for (long q = -30; q <= 30; ++q) {
      for (long p = -30; p <= 30; ++p) by_q += p * p + q * q == lam;
    }
    EXPECT_EQ(static_cast<long>(c.count()), by_q) << lam;
    EXPECT_EQ(static_cast<long>(c.count()), oracle::sum_of_two_squares_count(lam)) << lam;
  }
}

TEST(Zygmund, ClosedFormCases) {
  std::vector<cplx> single(12, 0.0);
  single[3] = cplx(0.0, 2.0);
  EXPECT_NEAR(zygmund_ratio(25, single), 1.0, 1e-14);
  // (2 + 2 cos)^2 integrates to 6 under dmu and ||p||_2^2 = 2.
  std::vector<cplx> two(4, 0.0);
  two[0] = two[1] = 1.0;
  EXPECT_NEAR(zygmund_ratio(1, two), std::sqrt(6.0) / 2.0, 1e-10);
  EXPECT_THROW(zygmund_ratio(1, std::vector<cplx>(4, 0.0)), DomainError);
  EXPECT_THROW(zygmund_ratio(1, std::vector<cplx>(3, 1.0)), DomainError);
}

TEST(Zygmund, MatchesConvolutionOracle) {
  std::mt19937_64 rng(1);
  for (long lam : {5L, 25L, 65L, 325L, 1105L}) {
    const auto circle = lattice_circle(lam);
    for (int trial = 0; trial < 5; ++trial) {
      const auto c = random_coeffs(circle.count(), rng);
      double l2 = 0.0;
      for (auto v : c) l2 += std::norm(v);
      const double expect = std::sqrt(oracle::fourth_moment(circle.points, c)) / l2;
      EXPECT_NEAR(zygmund_ratio(lam, c), expect, 1e-12 * expect) << lam;
    }
  }
}

TEST(Zygmund, InvariantUnderPhaseAndLatticeSymmetries) {
  std::mt19937_64 rng(2);
  const long lam = 65;
  const auto circle = lattice_circle(lam);
  const auto c = random_coeffs(circle.count(), rng);
  const double base = zygmund_ratio(lam, c);
  std::vector<cplx> rotated = c;
  for (auto& v : rotated) v *= std::polar(1.0, 0.83);
  EXPECT_NEAR(zygmund_ratio(lam, rotated), base, 1e-13);
  auto position = [&](Mode m) {
    return std::find_if(circle.points.begin(), circle.points.end(),
                        [&](Mode p) { return p.m == m.m && p.n == m.n; }) -
           circle.points.begin();
  };
  for (int s = 0; s < 8; ++s) {
    std::vector<cplx> moved(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      Mode p = circle.points[k];
      if (s & 1) p = {-p.m, p.n};
      if (s & 2) p = {p.m, -p.n};
      if (s & 4) p = {p.n, p.m};
      moved[position(p)] = c[k];
    }
    EXPECT_NEAR(zygmund_ratio(lam, moved), base, 1e-13);
  }
}

TEST(Zygmund, SmallSweepStaysBelowBound) {
  const auto rows = zygmund_sweep(300, 8, 20, 5, 2);
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) {
    EXPECT_GE(r.circle_count, 8u);
    EXPECT_LE(r.max_ratio, std::sqrt(5.0));
    EXPECT_GE(r.max_ratio, 1.0);
  }
  // Same seed, different thread count: identical rows.
  const auto again = zygmund_sweep(300, 8, 20, 5, 1);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].max_ratio, again[i].max_ratio);
}

TEST(Ingham, ClosedForms) {
  const std::vector<double> one{3.7};
  EXPECT_NEAR(ingham_gram(one, 2.5).smallest, 2.5, 1e-15);
  const std::vector<double> pair{0.0, 1.0};
  EXPECT_NEAR(ingham_gram(pair, 2 * pi).smallest, 2 * pi, 1e-10);
  const std::vector<double> dup{0.0, 1.0, 1.0};
  EXPECT_THROW(ingham_gram(dup, 1.0), DomainError);
  const std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(ingham_gram(unsorted, 1.0), DomainError);
}

TEST(Ingham, MatrixMatchesQuadratureAndIsHermitian) {
  const std::vector<double> f{0.0, 1.0, 2.0, 4.0, 5.0, 8.0};
  const double horizon = 3.3;
  const auto m = ingham_matrix(f, horizon);
  EXPECT_LE((m - m.adjoint()).norm(), 1e-15 * m.norm());
  const int n = 20000;
  for (std::size_t j = 0; j < f.size(); ++j) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      cplx s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * horizon / n;
        s += std::polar(1.0, t * (f[j] - f[k]));
      }
      s *= horizon / n;
      EXPECT_NEAR(std::abs(m(j, k) - s), 0.0, 1e-6);
    }
  }
  const auto r = ingham_gram(f, horizon);
  EXPECT_LE(r.smallest, horizon);
  EXPECT_GE(r.largest, horizon);
  EXPECT_LE(r.largest, f.size() * horizon + 1e-12);
}

TEST(Ingham, SquareTorusEigenvaluesPositiveBeyondTwoPi) {
  const auto t = Torus::square_2pi(32);
  const auto f = distinct_eigenvalues(*t, 100.0);
  for (double v : f) EXPECT_EQ(v, std::round(v));
  EXPECT_EQ(f.front(), 0.0);
  EXPECT_GT(ingham_gram(f, 2 * pi + 0.5).smallest, 0.0);
  std::vector<double> horizons;
  for (int i = 0; i <= 28; ++i) horizons.push_back(1.0 + 0.25 * i);
  const auto chart = ingham_chart(f, horizons);
  for (std::size_t i = 1; i < chart.size(); ++i) EXPECT_GE(chart[i].smallest, chart[i - 1].smallest - 1e-12);
}

TEST(Ingham, BoundIsNondecreasingForNestedSets) {
  const auto t = Torus::square_2pi(32);
  const auto big = distinct_eigenvalues(*t, 50.0);
  const auto small = distinct_eigenvalues(*t, 20.0);
  for (double horizon : {4.0, 7.0}) {
    EXPECT_LE(ingham_gram(big, horizon).smallest, ingham_gram(small, horizon).smallest + 1e-12);
  }
}

TEST(InghamRoute, UniformWeightGivesB) {
  const auto t = Torus::square_2pi(32);
  const auto c = observability_from_ingham(build_weight(WeightSpec::uniform(), t), 7.0, 25.0);
  EXPECT_TRUE(c.certified);
  EXPECT_NEAR(c.eigenspace_min, 1.0, 1e-13);
  EXPECT_NEAR(c.bound, c.smallest, 1e-12);
  EXPECT_LE(c.bound, 7.0);
}

TEST(InghamRoute, NeverExceedsContinuousGramian) {
  const auto t = Torus::square_2pi(32);
  const double horizon = 7.0;
  const double cut = 25.0;
  for (const auto& spec : {WeightSpec::strip(0.0, pi), WeightSpec::fat_cantor(3, 0.8),
                           WeightSpec::disk(pi, pi, 2.0)}) {
    const auto w = build_weight(spec, t);
    const auto c = observability_from_ingham(w, horizon, cut);
    ASSERT_TRUE(c.certified) << spec.describe();
    EXPECT_GT(c.eigenspace_min, 0.0);
    const ModeSubspace sub(t, cut);
    std::vector<std::size_t> slots(sub.indices().begin(), sub.indices().end());
    std::vector<double> w2;
    for (auto v : w.values()) w2.push_back(v.real() * v.real());
    const double exact = oracle::dense_lambda_min(oracle::continuous_gramian(*t, slots, w2, horizon));
    EXPECT_GT(exact, 0.0);
    EXPECT_LE(c.bound, exact + 1e-8) << spec.describe();
  }
}

TEST(InghamRoute, RequiresSquareTorus) {
  EXPECT_THROW(observability_from_ingham(build_weight(WeightSpec::uniform(), Torus::make_2d(1.0, 2.0, 8, 8)),
                                         1.0, 10.0),
               DomainError);
}

}  // namespace
}  // namespace toruslab
