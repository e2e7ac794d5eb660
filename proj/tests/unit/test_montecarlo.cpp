#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "spectral_clt/errors.hpp"
#include "spectral_clt/montecarlo.hpp"

using namespace spectral_clt;

namespace {

struct Moments {
  cplx second{0, 0};
  double fourth = 0;
  double fourth_se = 0;
};

Moments sample_moments(Family f, double tau, int draws, std::uint64_t seed) {
  auto rng = make_engine(seed, 0, 0);
  Moments m;
  double s4 = 0, s8 = 0;
  for (int i = 0; i < draws; ++i) {
    const cplx x = draw_innovation(f, tau, rng);
    m.second += x * x;
    const double q = std::norm(x) * std::norm(x);
    s4 += q;
    s8 += q * q;
  }
  m.second /= draws;
  m.fourth = s4 / draws;
  m.fourth_se = std::sqrt((s8 / draws - m.fourth * m.fourth) / draws);
  return m;
}

}  // namespace

TEST(Families, TheoreticalMoments) {
  EXPECT_DOUBLE_EQ(family_moments(Family::RealGaussian).fourth, 3.0);
  EXPECT_DOUBLE_EQ(family_moments(Family::ComplexGaussian).fourth, 2.0);
  // Mixture of Example A.1: E|X|^4 = 1 + 5 tau / 4 and E X^2 = 1/2.
  const auto a1 = family_moments(Family::MixtureA1, 0.875);
  EXPECT_DOUBLE_EQ(a1.fourth, 1.0 + 1.25 * 0.875);
  EXPECT_DOUBLE_EQ(a1.second.real(), 0.5);
  EXPECT_DOUBLE_EQ(a1.params.alpha, 0.25);
  EXPECT_DOUBLE_EQ(family_moments(Family::ScaledT5).fourth, 9.0);
  EXPECT_DOUBLE_EQ(family_moments(Family::MixtureA2, 0.5).fourth, 1.5);
  EXPECT_THROW(family_moments(Family::MixtureA1, 1.5), Error);
}

TEST(Families, SampledMomentsMatch) {
  for (Family f : {Family::RealGaussian, Family::ComplexGaussian, Family::MixtureA1,
                   Family::MixtureA2}) {
    const auto th = family_moments(f, 0.875);
    const auto s = sample_moments(f, 0.875, 1'000'000, 17);
    EXPECT_NEAR(s.fourth, th.fourth, 4 * s.fourth_se) << to_string(f);
    EXPECT_NEAR(s.second.real(), th.second.real(), 5e-3) << to_string(f);
    EXPECT_NEAR(s.second.imag(), th.second.imag(), 5e-3) << to_string(f);
  }
  // The t5 eighth moment is infinite, so the sample fourth moment has no
  // usable standard error; a relative band is used instead.
  const auto t5 = sample_moments(Family::ScaledT5, 0.875, 1'000'000, 17);
  EXPECT_NEAR(t5.fourth, 9.0, 0.9);
  EXPECT_NEAR(t5.second.real(), 1.0, 1e-2);
}

TEST(Sampling, StandardizedColumns) {
  PopulationSpec spec;
  spec.p = 3;
  const Eigen::MatrixXd X = sample_population(spec, 100'000, 5);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::RowVectorXd var = (X.rowwise() - mean).colwise().squaredNorm() / (X.rows() - 1);
  const double se_mean = 1.0 / std::sqrt(1e5), se_var = std::sqrt(2.0 / 1e5);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LE(std::abs(mean(j)), 4 * se_mean);
    EXPECT_LE(std::abs(var(j) - 1.0), 4 * se_var);
  }
}

TEST(Sampling, LoadingAndMean) {
  PopulationSpec spec;
  spec.p = 2;
  spec.loading = Eigen::Matrix2cd::Identity() * 2.0;
  spec.mean = Eigen::Vector2cd(1.0, -1.0);
  const Eigen::MatrixXd X = sample_population(spec, 50'000, 9);
  EXPECT_NEAR(X.col(0).mean(), 1.0, 0.05);
  EXPECT_NEAR(X.col(1).mean(), -1.0, 0.05);
  EXPECT_NEAR((X.col(0).array() - X.col(0).mean()).square().mean(), 4.0, 0.15);

  spec.family = Family::ComplexGaussian;
  EXPECT_THROW(sample_population(spec, 10, 1), Error);
  EXPECT_EQ(sample_population_complex(spec, 10, 1).rows(), 10);
  spec.loading = Eigen::MatrixXcd::Identity(3, 3);
  EXPECT_THROW(sample_population_complex(spec, 10, 1), Error);
}

TEST(Sampling, SeedsAreReproducibleAndStreamsDiffer) {
  PopulationSpec spec;
  spec.p = 4;
  const auto a = sample_population(spec, 20, 11, 0);
  const auto b = sample_population(spec, 20, 11, 0);
  const auto c = sample_population(spec, 20, 11, 1);
  EXPECT_EQ((a - b).norm(), 0.0);
  EXPECT_GT((a - c).norm(), 1.0);
}

TEST(Simulation, ThreadCountDoesNotChangeResults) {
  PopulationSpec spec;
  spec.p = 10;
  const auto one = simulate_identity_table(10, 30, 200, spec, 3, {0.05, 1});
  const auto four = simulate_identity_table(10, 30, 200, spec, 3, {0.05, 4});
  EXPECT_EQ(one.empirical_mean, four.empirical_mean);
  EXPECT_EQ(one.empirical_variance, four.empirical_variance);
  EXPECT_EQ(one.rejection_rate, four.rejection_rate);

  const auto e1 = simulate_equality_table(5, 20, 25, 100, spec, spec, 4, {0.05, 1});
  const auto e3 = simulate_equality_table(5, 20, 25, 100, spec, spec, 4, {0.05, 3});
  EXPECT_EQ(e1.empirical_mean, e3.empirical_mean);
  EXPECT_EQ(e1.empirical_variance, e3.empirical_variance);
}

TEST(Simulation, SummaryCarriesAnalyticPairs) {
  PopulationSpec spec;
  spec.p = 25;
  const auto s = simulate_identity_table(25, 50, 300, spec, 7);
  EXPECT_NEAR(s.analytic_adjusted.mean, 8.226, 5e-4);
  EXPECT_NEAR(s.analytic_raw.mean, 8.017, 1e-3);
  EXPECT_EQ(s.replications, 300);
  EXPECT_NEAR(s.empirical_mean, 8.226, 4 * std::sqrt(0.45 / 300));
  EXPECT_THROW(simulate_identity_table(25, 50, 1, spec, 7), Error);
  EXPECT_THROW(simulate_identity_table(50, 50, 10, spec, 7), Error);
}

TEST(Simulation, Grids) {
  EXPECT_EQ(table1_grid().size(), 8u);
  EXPECT_EQ(table2_grid().size(), 6u);
  EXPECT_EQ(table1_grid().front(), std::make_pair(25, 50));
  EXPECT_EQ(table2_grid().back(), std::make_pair(100, 125));
}

TEST(Pairwise, MatchesDirectFormulas) {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 0.0);
  const auto mv = pairwise_mean_variance(v);
  EXPECT_DOUBLE_EQ(mv.mean, 500.0);
  EXPECT_NEAR(mv.variance, 1001.0 * 1002.0 / 12.0, 1e-9);
}

TEST(Counterexamples, FormulaArithmetic) {
  CounterexampleConfig c;
  c.example = Counterexample::A3;
  c.m_half = 50;
  c.n = 200;
  EXPECT_NEAR(counterexample_reference_formula(c), 112.0 * 50 / 200, 1e-12);
  c.theta = M_PI / 4;
  EXPECT_NEAR(counterexample_reference_formula(c), 85.0 * 50 / 200, 1e-12);

  c.example = Counterexample::A1;
  c.theta = 0;
  EXPECT_NEAR(counterexample_reference_formula(c), 5.5 * 50 / 200, 1e-12);
}

TEST(Counterexamples, BlocksAreValidLoadings) {
  for (auto e : {Counterexample::A1, Counterexample::A2, Counterexample::A3}) {
    for (double theta : {0.0, M_PI / 4, 0.3}) {
      CounterexampleConfig c;
      c.example = e;
      c.theta = theta;
      c.theta1 = 0.2;
      const Eigen::Matrix2cd G = counterexample_block(c);
      // Gamma Gamma^* = L = diag(1, 2) for every rotation.
      const Eigen::Matrix2cd L = G * G.adjoint();
      EXPECT_NEAR(std::abs(L(0, 0) - 1.0), 0, 1e-12);
      EXPECT_NEAR(std::abs(L(1, 1) - 2.0), 0, 1e-12);
      EXPECT_NEAR(std::abs(L(0, 1)), 0, 1e-12);
    }
  }
}

TEST(Counterexamples, MonteCarloTracksExactVariance) {
  for (auto e : {Counterexample::A1, Counterexample::A2, Counterexample::A3}) {
    for (double theta : {0.0, M_PI / 4}) {
      CounterexampleConfig c;
      c.example = e;
      c.theta = theta;
      c.m_half = 20;
      c.n = 80;
      c.reps = 1500;
      c.seed = 31;
      const auto r = counterexample_variance(c);
      EXPECT_NEAR(r.empirical, r.exact, 4 * r.empirical_se) << to_string(e) << " " << theta;
    }
  }
}

TEST(Counterexamples, ParsingAndValidation) {
  EXPECT_EQ(counterexample_from_string("A3"), Counterexample::A3);
  EXPECT_EQ(counterexample_from_string("a1"), Counterexample::A1);
  EXPECT_THROW(counterexample_from_string("A4"), Error);
  CounterexampleConfig c;
  c.n = 0;
  EXPECT_THROW(counterexample_variance(c), Error);
}

TEST(Oscillation, TwoAccumulationPoints) {
  const auto pts = oscillation_demo(Counterexample::A3, {10, 20, 40, 80}, 0.5, 0, 1);
  ASSERT_EQ(pts.size(), 4u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i].n, 4 * pts[i].m_half);
    EXPECT_NEAR(pts[i].reference_formula, i % 2 == 0 ? 28.0 : 21.25, 1e-12);
    EXPECT_TRUE(std::isnan(pts[i].empirical));
  }
  EXPECT_NE(pts[0].exact, pts[1].exact);
  EXPECT_NEAR(pts[0].exact, pts[2].exact, 1e-12);
}
