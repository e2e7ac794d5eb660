#pragma once

// Marchenko-Pastur limiting spectral distributions for a discrete population
// spectrum H: the companion Stieltjes transform, support, density and linear
// functionals.

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "spectral_clt/spectral_function.hpp"

namespace spectral_clt {

struct Atom {
  double location;
  double weight;
};

/// Limiting regime (y, H): aspect ratio p/n and a discrete population spectral
/// distribution. One instance per sample-size convention (y_n or y_N).
class SpectralModel {
 public:
  SpectralModel(double ratio, std::vector<Atom> population);

  /// H = delta_1.
  static SpectralModel identity(double ratio);
  /// H = delta_{sigma2}.
  static SpectralModel scaled_identity(double ratio, double sigma2);

  double ratio() const noexcept { return ratio_; }
  std::span<const Atom> population() const noexcept { return population_; }

  double population_mean() const noexcept;
  double max_atom() const noexcept;
  /// Smallest strictly positive atom.
  double min_positive_atom() const noexcept;
  /// H({0}).
  double zero_mass() const noexcept;
  /// True for a single atom.
  bool is_point_mass() const noexcept { return population_.size() == 1; }

 private:
  double ratio_;
  std::vector<Atom> population_;
};

struct CompanionStieltjes {
  cplx z;
  cplx value;
  double residual;
  int iterations;
};

struct SupportInterval {
  double lower;
  double upper;
  double atom_at_zero;
};

struct SolverOptions {
  double damping = 0.5;
  int max_iterations = 10'000;
  double tolerance = 1e-12;
};

/// Unique root with Im > 0 of z = -1/m + y * int t/(1+t m) dH(t).
///
/// Damped fixed-point iteration from 1/(-z + y int t dH), finished with
/// Newton steps once the iterate is close. Im(z) < 0 is served by conjugate
/// reflection; Im(z) == 0 is rejected.
CompanionStieltjes solve_companion_stieltjes(const SpectralModel& model, cplx z,
                                             const SolverOptions& options = {},
                                             std::optional<cplx> initial_guess = std::nullopt);

/// |z + 1/m - y int t/(1+t m) dH|.
double companion_residual(const SpectralModel& model, cplx z, cplx mbar) noexcept;

/// d mbar / dz from an already solved value.
cplx companion_derivative_from_value(const SpectralModel& model, cplx mbar) noexcept;

/// d mbar / dz = 1 / (1/mbar^2 - y int t^2/(1+t mbar)^2 dH).
cplx companion_derivative(const SpectralModel& model, cplx z);

/// Stieltjes transform of F^{y,H} recovered from the companion transform:
/// mbar = -(1-y)/z + y m.
cplx stieltjes_from_companion(const SpectralModel& model, cplx z, cplx mbar) noexcept;

/// Fixed offset used by Stieltjes inversion.
inline constexpr double kInversionOffset = 1e-6;

SupportInterval mp_support(const SpectralModel& model);

/// Density of the continuous part of F^{y,H} at x > 0.
double mp_density(const SpectralModel& model, double x);

/// int g dF^{y,H}: quadrature over the continuous part plus g(0) times the atom
/// at the origin. Throws DomainError when the atom is positive and g(0) is not
/// defined.
double mp_linear_functional(const SpectralModel& model, const SpectralFunction& g);

/// Closed forms for g(x) = x - log x - 1 and H = delta_1, 0 < y < 1.
struct IdentityCentering {
  double functional;  ///< F^y(g)
  double mean;        ///< m(g)
  double variance;    ///< v(g)
};

IdentityCentering identity_case_centering(double y);

}  // namespace spectral_clt
