#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/weights.hpp"

namespace toruslab {
namespace {

constexpr double pi = std::numbers::pi;

ObservationSetup setup_for(const TorusPtr& t, const WeightSpec& w, double horizon, double cut) {
  ObservationSetup s{build_weight(w, t)};
  s.horizon = horizon;
  s.lambda_max = cut;
  return s;
}

Eigen::VectorXcd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = g(rng);
    v[i] = {re, g(rng)};
  }
  return v;
}

TEST(Gramian, UniformWeightIsHorizonTimesIdentity) {
  auto t = Torus::square_2pi(16);
  std::mt19937_64 rng(1);
  for (auto rule : {QuadratureRule::midpoint, QuadratureRule::trapezoid}) {
    auto s = setup_for(t, WeightSpec::uniform(), 1.7, 20.0);
    s.rule = rule;
    const auto u = random_band_limited(t, 20.0, rng);
    const auto g = gramian_apply(s, u);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(std::abs(g[i] - 1.7 * u[i]), 0.0, 1e-14);
  }
}

TEST(Gramian, QuadraticFormMatchesTimeSteppingOracle) {
  auto t = Torus::make_2d(2 * pi, 3.0, 16, 12);
  const auto s = setup_for(t, WeightSpec::disk(2.0, 1.0, 1.2), 0.8, 25.0);
  const auto gram = Gramian::from_setup(s);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = random_band_limited(t, 25.0, rng);
    const double lhs = inner(gram.apply(u), u).real();
    const double rhs = oracle::observed_energy(u, std::vector<double>(gram.square_weight().begin(),
                                                                      gram.square_weight().end()),
                                               gram.quadrature());
    EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
  }
}

TEST(Gramian, SingleModeDiagonalIsHorizonTimesMeanSquareWeight) {
  auto t = Torus::make_2d(1.0, 1.5, 16, 16);
  const auto s = setup_for(t, WeightSpec::strip(0.1, 0.45), 0.6, 400.0);
  const auto gram = Gramian::from_setup(s);
  double mean_w2 = 0.0;
  for (double v : gram.square_weight()) mean_w2 += v;
  mean_w2 /= static_cast<double>(t->size());
  for (Eigen::Index k : {0, 3, 11}) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(gram.dim()));
    e[k] = 1.0;
    EXPECT_NEAR(gram.apply(e)[k].real(), 0.6 * mean_w2, 1e-13);
  }
}

TEST(Gramian, SelfAdjointPositiveAndDeterministicAcrossThreads) {
  auto t = Torus::square_2pi(32);
  const auto s = setup_for(t, WeightSpec::fat_cantor(3, 0.8), 1.0, 40.0);
  const auto g1 = Gramian::from_setup(s, 1);
  const auto g4 = Gramian::from_setup(s, 4);
  std::mt19937_64 rng(3);
  const auto n = static_cast<Eigen::Index>(g1.dim());
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_vector(n, rng);
    const auto v = random_vector(n, rng);
    const auto gu = g1.apply(u);
    const cplx lhs = v.dot(gu);
    const cplx rhs = g1.apply(v).dot(u);
    EXPECT_LE(std::abs(lhs - rhs), 1e-11 * u.norm() * v.norm());
    EXPECT_GE(u.dot(gu).real(), -1e-12 * u.squaredNorm());
    const auto gu4 = g4.apply(u);
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_EQ(gu[i], gu4[i]);
  }
}

TEST(Gramian, MonotoneInHorizonWithAlignedNodes) {
  auto t = Torus::square_2pi(32);
  const auto w2 = build_weight(WeightSpec::disk(1.0, 2.0, 1.0), t).real_values();
  std::vector<double> sq(w2.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = w2[i] * w2[i];
  // Midpoint nodes with the same step: the shorter horizon's nodes are a prefix.
  const double h = 0.02;
  const Gramian short_g(ModeSubspace(t, 50.0), sq, TimeQuadrature::make(QuadratureRule::midpoint, 30 * h, 30));
  const Gramian long_g(ModeSubspace(t, 50.0), sq, TimeQuadrature::make(QuadratureRule::midpoint, 55 * h, 55));
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_vector(static_cast<Eigen::Index>(short_g.dim()), rng);
    EXPECT_GE(u.dot(long_g.apply(u)).real(), u.dot(short_g.apply(u)).real() - 1e-12);
  }
}

TEST(Gramian, MonotoneInWeight) {
  auto t = Torus::square_2pi(32);
  const auto small = setup_for(t, WeightSpec::disk(3.0, 3.0, 1.0), 1.0, 40.0);
  const auto large = setup_for(t, WeightSpec::disk(3.0, 3.0, 2.0), 1.0, 40.0);
  const auto gs = Gramian::from_setup(small);
  const auto gl = Gramian::from_setup(large);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_vector(static_cast<Eigen::Index>(gs.dim()), rng);
    EXPECT_LE(u.dot(gs.apply(u)).real(), u.dot(gl.apply(u)).real() + 1e-12);
  }
}

TEST(Gramian, RejectsInvalidSetups) {
  auto t = Torus::square_2pi(16);
  auto s = setup_for(t, WeightSpec::uniform(), 1.0, 30.0);
  s.nodes = 3;
  EXPECT_THROW(Gramian::from_setup(s), DomainError);
  s.sampling_override = true;
  EXPECT_NO_THROW(Gramian::from_setup(s));

  auto zero = setup_for(t, WeightSpec::uniform(0.0), 1.0, 30.0);
  EXPECT_THROW(Gramian::from_setup(zero), DomainError);

  auto complex_w = s;
  complex_w.weight[0] = cplx(1.0, 0.5);
  EXPECT_THROW(Gramian::from_setup(complex_w), DomainError);

  auto ok = setup_for(t, WeightSpec::uniform(), 1.0, 5.0);
  EXPECT_THROW(gramian_apply(ok, FourierField::single_mode(t, {4, 0})), DomainError);
}

TEST(ObservabilityConstant, UniformWeightGivesHorizon) {
  auto t = Torus::square_2pi(32);
  const auto rep = observability_constant(setup_for(t, WeightSpec::uniform(), 1.0, 60.0));
  EXPECT_NEAR(rep.observability_constant, 1.0, 1e-10);
  EXPECT_NEAR(rep.lambda_max, 1.0, 1e-10);
  EXPECT_EQ(rep.rule_nodes, required_nodes(1.0, 60.0));
  EXPECT_FALSE(rep.sampling_override);
}

class DenseOracle : public ::testing::TestWithParam<WeightSpec> {};

TEST_P(DenseOracle, MatrixFreeSmallestEigenvalueMatchesDense) {
  auto t = Torus::square_2pi(32);
  const auto s = setup_for(t, GetParam(), 1.0, 36.0);
  const auto gram = Gramian::from_setup(s);
  ASSERT_LE(gram.dim(), 120u);
  const double dense = oracle::dense_lambda_min(oracle::dense_gramian(gram));
  const auto rep = observability_constant(s);
  EXPECT_NEAR(rep.lambda_min, dense, 1e-8 * std::max(1.0, dense));
  EXPECT_GT(rep.lambda_min, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Weights, DenseOracle,
                         ::testing::Values(WeightSpec::strip(0.0, pi), WeightSpec::disk(pi, pi, 1.5),
                                           WeightSpec::fat_cantor(3, 0.8)));

TEST(ObservabilityConstant, StripBoundedByDiagonal) {
  auto t = Torus::square_2pi(32);
  const auto rep = observability_constant(setup_for(t, WeightSpec::strip(0.0, pi), 1.0, 30.0));
  EXPECT_LE(rep.lambda_min, 0.5 + 1e-12);
}

TEST(ObservabilityConstant, OneDimensionalStrip) {
  auto t = Torus::make_1d(2 * pi, 128);
  const auto s = setup_for(t, WeightSpec::strip(1.0, 2.0), 1.0, 900.0);
  const auto gram = Gramian::from_setup(s);
  const auto rep = observability_constant(s);
  EXPECT_EQ(rep.dim, 61u);
  EXPECT_NEAR(rep.lambda_min, oracle::dense_lambda_min(oracle::dense_gramian(gram)), 1e-8);
  EXPECT_GT(rep.lambda_min, 0.0);
}

TEST(ObservabilityConstant, SweepEchoesCuts) {
  auto t = Torus::square_2pi(32);
  const std::vector<double> cuts{2.0, 8.0, 32.0};
  const auto pts = observability_sweep(setup_for(t, WeightSpec::disk(1.0, 1.0, 1.0), 1.0, 0.0), cuts);
  ASSERT_EQ(pts.size(), 3u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i].lambda_max, cuts[i]);
    EXPECT_NEAR(pts[i].observability_constant * pts[i].lambda_min, 1.0, 1e-12);
  }
  // Nested subspaces: the smallest eigenvalue cannot increase.
  EXPECT_GE(pts[0].lambda_min, pts[1].lambda_min - 1e-8);
}

TEST(MixedNorm, SingleModeHasConstantModulus) {
  auto t = Torus::make_2d(1.0, 2.0, 16, 16);
  const auto u = FourierField::single_mode(t, {2, -1}, cplx(0.0, 3.0));
  const double v = mixed_norm_L4L2(u, 0.7, 1);
  EXPECT_NEAR(v, std::pow(2.0, 0.25) * std::sqrt(0.7) * 3.0, 1e-13);
}

TEST(MixedNorm, TwoModeClosedForms) {
  auto t = Torus::square_2pi(16);
  // Same circle: |u|^2 = 2 + 2cos(dk.z) is time independent, so
  // value^4 = (2pi)^2 * int (2 + 2cos)^2 = 4pi^2 * 24pi^2.
  FourierField same(t);
  same[*t->mode_index({1, 0})] = 1.0;
  same[*t->mode_index({0, 1})] = 1.0;
  EXPECT_NEAR(std::pow(mixed_norm_L4L2(same, 2 * pi, required_nodes_for(same, 2 * pi)), 4),
              96.0 * std::pow(pi, 4), 1e-9);
  // Different circles: the cross term integrates to zero over a full period,
  // leaving 4pi at every point: value^4 = 16pi^2 * 4pi^2.
  FourierField diff(t);
  diff[*t->mode_index({1, 0})] = 1.0;
  diff[*t->mode_index({2, 0})] = 1.0;
  const int nodes = required_nodes_for(diff, 2 * pi);
  EXPECT_EQ(nodes, 12);
  EXPECT_NEAR(std::pow(mixed_norm_L4L2(diff, 2 * pi, nodes), 4), 64.0 * std::pow(pi, 4), 1e-9);
  EXPECT_THROW(mixed_norm_L4L2(diff, 2 * pi, 5), DomainError);
}

TEST(MixedNorm, StrichartzRatioIsFiniteAcrossBands) {
  auto t = Torus::square_2pi(32);
  for (double band : {10.0, 40.0, 120.0}) {
    const double r = strichartz_ratio_max(t, band, 1.0, 10, 7);
    EXPECT_TRUE(std::isfinite(r));
    EXPECT_GT(r, 0.0);
  }
}

TEST(Eigenspace, UniformWeightGivesOne) {
  auto t = Torus::square_2pi(32);
  EXPECT_NEAR(eigenspace_observability(t, 25.0, build_weight(WeightSpec::uniform(), t)), 1.0, 1e-13);
}

TEST(Eigenspace, HalfTorusOnUnitCircleMatchesHandMatrix) {
  auto t = Torus::square_2pi(16);
  const auto slots = eigenspace_slots(*t, 1.0);
  ASSERT_EQ(slots.size(), 4u);
  // Entry (k,l) = (1/4pi^2) int_{x<pi} e^{i(k-l).z} dz. The differences among
  // (+-1,0),(0,+-1) are (0,0) -> 1/2, (+-2,0) -> 0, or have dn != 0 -> 0.
  const auto half = build_weight(WeightSpec::strip(0.0, pi), t);
  const auto w2_hat = to_fourier(multiply(half, half));
  const auto m = eigenspace_matrix(*t, slots, w2_hat);
  for (Eigen::Index k = 0; k < 4; ++k) {
    for (Eigen::Index l = 0; l < 4; ++l) {
      EXPECT_NEAR(std::abs(m(k, l) - (k == l ? cplx(0.5) : cplx(0.0))), 0.0, 1e-15);
    }
  }
  EXPECT_NEAR(eigenspace_observability(t, 1.0, half), 0.5, 1e-14);
}

TEST(Eigenspace, FatCantorIsPositiveAndEmptyEigenspaceThrows) {
  auto t = Torus::square_2pi(64);
  const auto w = build_weight(WeightSpec::fat_cantor(3, 0.8), t);
  for (double lam : {1.0, 25.0, 65.0}) EXPECT_GT(eigenspace_observability(t, lam, w), 0.0);
  EXPECT_THROW(eigenspace_observability(t, 3.0, w), DomainError);
}

TEST(Lanczos, ReportsBracketWhenIterationCapIsHit) {
  const Eigen::Index n = 50;
  auto apply = [](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] *= 1.0 + i;
  };
  const auto ok = lanczos_extremal(apply, n, 1);
  EXPECT_NEAR(ok.lambda_min, 1.0, 1e-10);
  EXPECT_NEAR(ok.lambda_max, 50.0, 1e-9);
  try {
    (void)lanczos_extremal(apply, n, 1, 1e-8, 4);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("bracket"), std::string::npos) << e.what();
  }
}

TEST(ConjugateGradient, SolvesDiagonalSystem) {
  const Eigen::Index n = 30;
  auto apply = [](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) y[i] *= 1.0 + 0.5 * i;
  };
  std::mt19937_64 rng(9);
  const auto b = random_vector(n, rng);
  const auto res = conjugate_gradient(apply, b, 1e-12, 100);
  EXPECT_TRUE(res.converged);
  for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(std::abs(res.solution[i] * (1.0 + 0.5 * i) - b[i]), 0.0, 1e-10);
}

}  // namespace
}  // namespace toruslab
