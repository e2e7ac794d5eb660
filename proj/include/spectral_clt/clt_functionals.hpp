#pragma once

// Limiting mean and covariance functionals of linear spectral statistics.
//
// Three families of routes are provided:
//  * unit-circle forms I1, I2, J1, J2 for the identity population;
//  * rectangle-contour forms for a general discrete H, driven by the
//    companion Stieltjes solver;
//  * unit-circle forms for Fisher matrices.

#include "spectral_clt/mp_core.hpp"
#include "spectral_clt/spectral_function.hpp"

namespace spectral_clt {

/// Moment parameters of the standardized innovations.
///   kappa: 2 for real data, 1 for complex data.
///   alpha: |E X^2|^2 (1 for real data, 0 for circular complex data).
///   beta:  E|X|^4 - alpha - 2.
struct MomentParams {
  int kappa = 2;
  double alpha = 1.0;
  double beta = 0.0;

  static MomentParams real_gaussian() { return {2, 1.0, 0.0}; }
  static MomentParams complex_gaussian() { return {1, 0.0, 0.0}; }
  static MomentParams real(double beta) { return {2, 1.0, beta}; }

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

/// Trapezoidal quadrature on circles |xi| = rho. The node count starts at
/// `initial_nodes` and doubles until two successive values agree to
/// `target_tolerance`; if `max_nodes` is reached with a change still above
/// `failure_tolerance`, QuadratureNotConverged is thrown.
struct CircleQuadrature {
  int initial_nodes = 256;
  int max_nodes = 1 << 17;
  double target_tolerance = 1e-14;
  double failure_tolerance = 1e-8;
};

double contour_I1(const SpectralFunction& f, double y, const CircleQuadrature& quad = {});
double contour_I2(const SpectralFunction& f, double y, const CircleQuadrature& quad = {});
double contour_J1(const SpectralFunction& f, const SpectralFunction& g, double y,
                  const CircleQuadrature& quad = {});
double contour_J2(const SpectralFunction& f, const SpectralFunction& g, double y,
                  const CircleQuadrature& quad = {});

/// (kappa-1) I1(f) + beta I2(f).
double identity_lss_mean(const SpectralFunction& f, double y, const MomentParams& mp,
                         const CircleQuadrature& quad = {});
/// kappa J1(f,g) + beta J2(f,g).
double identity_lss_cov(const SpectralFunction& f, const SpectralFunction& g, double y,
                        const MomentParams& mp, const CircleQuadrature& quad = {});

/// Nested axis-aligned rectangles around the support. Margins are fractions of
/// the support width; on the left they are additionally capped by a fraction of
/// the lower edge so the contour stays clear of the origin when y < 1.
/// Each side is cut into 16-point Gauss-Legendre panels no longer than
/// `panel_ratio` times their distance to the nearest singularity (the support,
/// the origin when y < 1, the other contour). The panel ratio is halved until
/// two successive values agree; a final change above `failure_tolerance`
/// raises QuadratureNotConverged.
struct ContourSpec {
  double inner_margin = 0.25;
  double outer_margin = 0.5;
  double inner_left_cap = 1.0 / 3.0;
  double outer_left_cap = 2.0 / 3.0;
  double inner_half_height = 0.5;
  double outer_half_height = 0.75;
  double panel_ratio = 2.0;
  int max_refinements = 3;
  double target_tolerance = 1e-11;
  double failure_tolerance = 1e-8;
};

/// Mean of the Gaussian limit of sum f(lambda_j) - p F^{y_n,H_p}(f).
double lss_mean_general(const SpectralFunction& f, const SpectralModel& model,
                        const MomentParams& mp, const ContourSpec& contour = {});

/// Covariance of the Gaussian limit for the pair (f, g).
double lss_cov_general(const SpectralFunction& f, const SpectralFunction& g,
                       const SpectralModel& model, const MomentParams& mp,
                       const ContourSpec& contour = {});

/// alpha (1 + m(z1) m(z2) (z1 - z2) / (m(z2) - m(z1))), with the diagonal
/// limit alpha (1 - m^2/m') when z1 and z2 coincide.
cplx a_kernel(cplx z1, cplx z2, const SpectralModel& model, double alpha);

/// m1(g) = -y F^{y,H}(x g'(x)), the shift separating the MLE from the
/// unbiased estimator.
double mle_mean_shift(const SpectralFunction& g, const SpectralModel& model);

/// Limiting ratios (y1, y2) of a Fisher matrix S_x S_y^{-1}.
class FisherModel {
 public:
  FisherModel(double y1, double y2);

  double y1() const noexcept { return y1_; }
  double y2() const noexcept { return y2_; }
  /// sqrt(y1 + y2 - y1 y2)
  double h() const noexcept { return h_; }
  /// Support [(1-h)^2, (1+h)^2] / (1-y2)^2 of the limiting distribution.
  double lower_edge() const noexcept;
  double upper_edge() const noexcept;

 private:
  double y1_;
  double y2_;
  double h_;
};

double fisher_lss_mean(const SpectralFunction& f, const FisherModel& fm, const MomentParams& mpx,
                       const MomentParams& mpy, const CircleQuadrature& quad = {});

double fisher_lss_cov(const SpectralFunction& f, const SpectralFunction& g, const FisherModel& fm,
                      const MomentParams& mpx, const MomentParams& mpy,
                      const CircleQuadrature& quad = {});

}  // namespace spectral_clt
