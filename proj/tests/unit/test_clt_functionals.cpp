#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spectral_clt/clt_functionals.hpp"
#include "spectral_clt/errors.hpp"
#include "spectral_clt/hypothesis_tests.hpp"
#include "spectral_clt/mp_core.hpp"

using namespace spectral_clt;
using SF = SpectralFunction;

namespace {

std::vector<SF> builtins() { return {SF::identity(), SF::square(), SF::log(), SF::lrt_kernel()}; }

const MomentParams kReal = MomentParams::real_gaussian();
const MomentParams kComplex = MomentParams::complex_gaussian();

}  // namespace

TEST(CircleRoutes, LinearFunctionIsCentered) {
  for (double y : {0.2, 0.5, 0.8}) {
    EXPECT_LE(std::abs(contour_I1(SF::identity(), y)), 1e-8);
    EXPECT_LE(std::abs(contour_I2(SF::identity(), y)), 1e-8);
  }
}

TEST(CircleRoutes, NullOnConstants) {
  for (double y : {0.2, 0.7}) {
    EXPECT_LE(std::abs(contour_I1(SF::constant(1.0), y)), 1e-10);
    EXPECT_LE(std::abs(contour_I2(SF::constant(1.0), y)), 1e-10);
    EXPECT_LE(std::abs(contour_J1(SF::identity(), SF::constant(1.0), y)), 1e-10);
    EXPECT_LE(std::abs(contour_J2(SF::identity(), SF::constant(1.0), y)), 1e-10);
  }
}

TEST(CircleRoutes, LinearPairingEqualsRatio) {
  for (double y : {0.2, 0.5, 0.7, 0.8}) {
    EXPECT_NEAR(contour_J1(SF::identity(), SF::identity(), y), y, 1e-8);
    EXPECT_NEAR(contour_J2(SF::identity(), SF::identity(), y), y, 1e-8);
  }
}

TEST(CircleRoutes, LrtKernelMatchesIdentityCentering) {
  const double y = 25.0 / 49.0;
  const auto c = identity_case_centering(y);
  EXPECT_NEAR(identity_lss_mean(SF::lrt_kernel(), y, kReal), c.mean, 1e-6);
  EXPECT_NEAR(identity_lss_cov(SF::lrt_kernel(), SF::lrt_kernel(), y, kReal), c.variance, 1e-6);
  EXPECT_NEAR(c.mean, 0.35688, 1e-5);
  EXPECT_NEAR(c.variance, 0.40712, 1e-5);
}

TEST(CircleRoutes, ComplexCaseHalvesVarianceAndDropsMean) {
  const double y = 0.4;
  for (const auto& f : builtins()) {
    EXPECT_LE(std::abs(identity_lss_mean(f, y, kComplex)), 1e-10) << f.name();
    EXPECT_NEAR(identity_lss_cov(f, f, y, kComplex), 0.5 * identity_lss_cov(f, f, y, kReal),
                1e-10)
        << f.name();
  }
}

TEST(CircleRoutes, NodeDoublingIsStable) {
  for (const auto& f : builtins()) {
    for (double y : {0.2, 0.8}) {
      CircleQuadrature coarse{4096, 4096, 0.0, 1.0};
      CircleQuadrature fine{8192, 8192, 0.0, 1.0};
      EXPECT_NEAR(contour_I1(f, y, coarse), contour_I1(f, y, fine), 1e-8) << f.name();
      EXPECT_NEAR(contour_I2(f, y, coarse), contour_I2(f, y, fine), 1e-8) << f.name();
      EXPECT_NEAR(contour_J1(f, f, y, coarse), contour_J1(f, f, y, fine), 1e-8) << f.name();
    }
  }
}

TEST(CircleRoutes, BilinearAndSymmetric) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const auto fs = builtins();
  const double y = 0.6;
  for (int trial = 0; trial < 20; ++trial) {
    const auto& f1 = fs[trial % 4];
    const auto& f2 = fs[(trial + 1) % 4];
    const auto& g = fs[(trial + 2) % 4];
    const double a = coef(rng), b = coef(rng);
    const auto combo = SF::linear_combination(a, f1, b, f2);
    for (auto route : {&contour_J1, &contour_J2}) {
      const double lhs = route(combo, g, y, {});
      const double rhs = a * route(f1, g, y, {}) + b * route(f2, g, y, {});
      EXPECT_NEAR(lhs, rhs, 1e-9);
      EXPECT_NEAR(route(f1, g, y, {}), route(g, f1, y, {}), 1e-10);
    }
  }
}

TEST(CircleRoutes, VariancesAreNonnegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ratio(0.05, 0.95), beta(0.0, 6.0);
  std::bernoulli_distribution real(0.5);
  for (int trial = 0; trial < 40; ++trial) {
    const MomentParams mp = real(rng) ? MomentParams::real(beta(rng))
                                      : MomentParams{1, 0.0, beta(rng)};
    const double y = ratio(rng);
    for (const auto& f : builtins()) EXPECT_GE(identity_lss_cov(f, f, y, mp), -1e-8);
  }
}

TEST(GeneralRoutes, AgreeWithCircleRoutesForPointMass) {
  for (double y : {0.2, 0.5, 0.8}) {
    const auto model = SpectralModel::identity(y);
    for (const auto& mp : {kReal, MomentParams::real(1.0)}) {
      for (const auto& f : builtins()) {
        EXPECT_NEAR(lss_mean_general(f, model, mp), identity_lss_mean(f, y, mp), 1e-5)
            << f.name() << " y=" << y << " beta=" << mp.beta;
      }
    }
    for (const auto& f : builtins()) {
      EXPECT_NEAR(lss_cov_general(f, f, model, kReal), identity_lss_cov(f, f, y, kReal), 1e-5)
          << f.name() << " y=" << y;
    }
  }
}

TEST(GeneralRoutes, ClosedFormExamples) {
  const auto half = SpectralModel::identity(0.5);
  EXPECT_LE(std::abs(lss_mean_general(SF::identity(), half, kReal)), 1e-8);
  EXPECT_NEAR(lss_cov_general(SF::identity(), SF::identity(), half, MomentParams::real(1.0)), 1.5,
              1e-8);
  EXPECT_LE(std::abs(lss_cov_general(SF::identity(), SF::constant(1.0), half, kReal)), 1e-8);
  for (const auto& f : builtins()) {
    EXPECT_LE(std::abs(lss_mean_general(f, half, kComplex)), 1e-12) << f.name();
  }
}

TEST(GeneralRoutes, TwoAtomCovarianceIsSymmetric) {
  const SpectralModel model(0.5, {{1.0, 0.5}, {2.0, 0.5}});
  const double fg = lss_cov_general(SF::lrt_kernel(), SF::square(), model, kReal);
  const double gf = lss_cov_general(SF::square(), SF::lrt_kernel(), model, kReal);
  EXPECT_NEAR(fg, gf, 1e-10 * std::max(1.0, std::abs(fg)));
  EXPECT_GE(lss_cov_general(SF::lrt_kernel(), SF::lrt_kernel(), model, kReal), -1e-8);
}

TEST(GeneralRoutes, ScaledPopulationScalesLinearFunction) {
  // Var(tr S) for Sigma = s I scales with s^2.
  const double y = 0.4, s = 2.0;
  const double base = lss_cov_general(SF::identity(), SF::identity(), SpectralModel::identity(y), kReal);
  const double scaled = lss_cov_general(SF::identity(), SF::identity(),
                                        SpectralModel::scaled_identity(y, s), kReal);
  EXPECT_NEAR(scaled, s * s * base, 1e-8);
}

TEST(AKernel, Examples) {
  const auto model = SpectralModel::identity(0.5);
  EXPECT_EQ(a_kernel(cplx(1, 1), cplx(1, 2), model, 0.0), cplx(0, 0));
  const cplx z(1.3, 0.7);
  const cplx a = a_kernel(z, std::conj(z), model, 1.0);
  EXPECT_LE(std::abs(a.imag()), 1e-12);
  const cplx b = a_kernel(cplx(1, 1), cplx(1, 2), model, 1.0);
  EXPECT_TRUE(std::isfinite(b.real()) && std::isfinite(b.imag()));
  EXPECT_GT(std::abs(1.0 - b), 0.0);

  // Direct evaluation from the quadratic root.
  const auto m1 = solve_companion_stieltjes(model, cplx(1, 1)).value;
  const auto m2 = solve_companion_stieltjes(model, cplx(1, 2)).value;
  const cplx expect = 1.0 + m1 * m2 * (cplx(1, 1) - cplx(1, 2)) / (m2 - m1);
  EXPECT_LT(std::abs(b - expect), 1e-10);
}

TEST(MleShift, Examples) {
  const auto model = SpectralModel::identity(0.5);
  EXPECT_NEAR(mle_mean_shift(SF::identity(), model), -0.5, 1e-6);
  EXPECT_NEAR(mle_mean_shift(SF::square(), model), -1.5, 1e-6);
  EXPECT_NEAR(mle_mean_shift(SF::constant(3.0), model), 0.0, 1e-12);
}

TEST(FisherRoutes, MatchClosedFormsOnTableGrid) {
  for (auto [p, n] : {std::pair{20, 40}, {50, 100}, {80, 160}, {20, 25}, {60, 75}, {100, 125}}) {
    const double y = double(p) / (n - 1);
    const FisherModel fm(y, y);
    const auto f = SF::fisher_lrt(y, y);
    EXPECT_NEAR(fisher_lss_mean(f, fm, kReal, kReal), fisher_lrt_mean(y, y), 1e-4) << p;
    EXPECT_NEAR(fisher_lss_cov(f, f, fm, kReal, kReal), fisher_lrt_variance(y, y), 1e-4) << p;
  }
}

TEST(FisherRoutes, Examples) {
  const double y = 20.0 / 39.0;
  const FisherModel fm(y, y);
  const auto f = SF::fisher_lrt(y, y);
  EXPECT_NEAR(fisher_lss_mean(f, fm, kReal, kReal), 0.2115, 1e-4);
  // Closed form 0.126591; the table prints 0.127.
  EXPECT_NEAR(fisher_lss_cov(f, f, fm, kReal, kReal), fisher_lrt_variance(y, y), 1e-10);
  EXPECT_NEAR(fisher_lss_cov(f, f, fm, kReal, kReal), 0.127, 5e-4);
  EXPECT_LE(std::abs(fisher_lss_mean(SF::constant(1.0), fm, kReal, kReal)), 1e-10);
  EXPECT_LE(std::abs(fisher_lss_cov(SF::constant(1.0), SF::constant(1.0), fm, kReal, kReal)), 1e-10);
  for (const auto& g : builtins()) {
    EXPECT_LE(std::abs(fisher_lss_mean(g, fm, kComplex, kComplex)), 1e-10) << g.name();
  }
  const double y2 = 50.0 / 99.0;
  const auto f2 = SF::fisher_lrt(y2, y2);
  EXPECT_NEAR(fisher_lss_cov(f2, f2, FisherModel(y2, y2), kReal, kReal), 0.121, 5e-4);
}

TEST(FisherRoutes, SymmetricAndValidated) {
  const FisherModel fm(0.3, 0.4);
  const auto mp = MomentParams::real(0.5);
  EXPECT_NEAR(fisher_lss_cov(SF::log(), SF::square(), fm, mp, mp),
              fisher_lss_cov(SF::square(), SF::log(), fm, mp, mp), 1e-10);
  EXPECT_THROW(FisherModel(0.3, 1.2), Error);
  EXPECT_THROW((MomentParams{3, 1.0, 0.0}.validate()), Error);
  EXPECT_THROW((MomentParams{2, 0.5, 0.0}.validate()), Error);
  EXPECT_THROW((MomentParams{2, 1.0, -3.0}.validate()), Error);
}
