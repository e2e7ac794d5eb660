#include "spectral_clt/mp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spectral_clt/errors.hpp"

namespace spectral_clt {

namespace {

constexpr double kPi = std::numbers::pi;

// y * int t/(1+t m) dH
cplx h_integral_1(const SpectralModel& model, cplx m) noexcept {
  cplx s = 0.0;
  for (const auto& a : model.population()) s += a.weight * a.location / (1.0 + a.location * m);
  return model.ratio() * s;
}

// y * int t^2/(1+t m)^2 dH
cplx h_integral_2(const SpectralModel& model, cplx m) noexcept {
  cplx s = 0.0;
  for (const auto& a : model.population()) {
    const cplx d = 1.0 + a.location * m;
    s += a.weight * a.location * a.location / (d * d);
  }
  return model.ratio() * s;
}

bool finite(cplx v) noexcept { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

CompanionStieltjes solve_upper(const SpectralModel& model, cplx z, const SolverOptions& opt,
                               cplx m) {
  const double tol = opt.tolerance * std::max(1.0, std::abs(z));
  double res = companion_residual(model, z, m);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (res <= tol) return {z, m, res, it};

    // Newton step on G(m) = z + 1/m - y int t/(1+tm) dH, accepted only if it
    // stays in the upper half plane and lowers the residual.
    const cplx g = z + 1.0 / m - h_integral_1(model, m);
    const cplx gp = -1.0 / (m * m) + h_integral_2(model, m);
    if (std::abs(gp) > 0.0) {
      const cplx mn = m - g / gp;
      if (finite(mn) && mn.imag() > 0.0) {
        const double rn = companion_residual(model, z, mn);
        if (rn < res) {
          m = mn;
          res = rn;
          continue;
        }
      }
    }

    const cplx next = 1.0 / (-z + h_integral_1(model, m));
    m = (1.0 - opt.damping) * m + opt.damping * next;
    res = companion_residual(model, z, m);
  }
  if (res <= tol) return {z, m, res, opt.max_iterations};
  throw Error(ErrorKind::NonConvergence,
              "companion Stieltjes solver did not converge at z = (" + std::to_string(z.real()) +
                  ", " + std::to_string(z.imag()) + "), residual " + std::to_string(res));
}

}  // namespace

SpectralModel::SpectralModel(double ratio, std::vector<Atom> population)
    : ratio_(ratio), population_(std::move(population)) {
  if (!(ratio_ > 0.0) || !std::isfinite(ratio_)) {
    throw Error(ErrorKind::InvalidArgument, "ratio must be positive and finite");
  }
  if (population_.empty()) throw Error(ErrorKind::InvalidArgument, "population has no atoms");
  double total = 0.0;
  bool positive = false;
  for (const auto& a : population_) {
    if (!std::isfinite(a.location) || a.location < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "population atoms must be finite and nonnegative");
    }
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
      throw Error(ErrorKind::InvalidArgument, "population weights must be positive");
    }
    total += a.weight;
    positive = positive || a.location > 0.0;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "population weights must sum to 1");
  }
  if (!positive) throw Error(ErrorKind::InvalidArgument, "population needs a positive atom");
}

SpectralModel SpectralModel::identity(double ratio) { return {ratio, {{1.0, 1.0}}}; }

SpectralModel SpectralModel::scaled_identity(double ratio, double sigma2) {
  return {ratio, {{sigma2, 1.0}}};
}

double SpectralModel::population_mean() const noexcept {
  double s = 0.0;
  for (const auto& a : population_) s += a.weight * a.location;
  return s;
}

double SpectralModel::max_atom() const noexcept {
  double s = 0.0;
  for (const auto& a : population_) s = std::max(s, a.location);
  return s;
}

double SpectralModel::min_positive_atom() const noexcept {
  double s = max_atom();
  for (const auto& a : population_) {
    if (a.location > 0.0) s = std::min(s, a.location);
  }
  return s;
}

double SpectralModel::zero_mass() const noexcept {
  double s = 0.0;
  for (const auto& a : population_) {
    if (a.location == 0.0) s += a.weight;
  }
  return s;
}

double companion_residual(const SpectralModel& model, cplx z, cplx mbar) noexcept {
  return std::abs(z + 1.0 / mbar - h_integral_1(model, mbar));
}

CompanionStieltjes solve_companion_stieltjes(const SpectralModel& model, cplx z,
                                             const SolverOptions& options,
                                             std::optional<cplx> initial_guess) {
  if (!finite(z)) throw Error(ErrorKind::InvalidArgument, "z must be finite");
  if (z.imag() == 0.0) {
    throw Error(ErrorKind::DomainError, "companion Stieltjes transform needs Im(z) != 0");
  }
  if (z.imag() < 0.0) {
    std::optional<cplx> guess;
    if (initial_guess) guess = std::conj(*initial_guess);
    auto r = solve_companion_stieltjes(model, std::conj(z), options, guess);
    r.z = z;
    r.value = std::conj(r.value);
    return r;
  }
  if (initial_guess && initial_guess->imag() > 0.0) {
    return solve_upper(model, z, options, *initial_guess);
  }

  const double mean = model.population_mean();
  auto start = [&](cplx w) { return 1.0 / (-w + model.ratio() * mean); };

  // Near the real axis, walk down from Im = 1 so each stage starts close to
  // its root.
  if (z.imag() < 0.1) {
    cplx w(z.real(), 1.0);
    cplx m = solve_upper(model, w, options, start(w)).value;
    int total = 0;
    for (double eta = 0.1; eta > z.imag(); eta *= 0.1) {
      auto r = solve_upper(model, cplx(z.real(), eta), options, m);
      m = r.value;
      total += r.iterations;
    }
    auto r = solve_upper(model, z, options, m);
    r.iterations += total;
    return r;
  }
  return solve_upper(model, z, options, start(z));
}

cplx companion_derivative_from_value(const SpectralModel& model, cplx mbar) noexcept {
  return 1.0 / (1.0 / (mbar * mbar) - h_integral_2(model, mbar));
}

cplx companion_derivative(const SpectralModel& model, cplx z) {
  return companion_derivative_from_value(model, solve_companion_stieltjes(model, z).value);
}

cplx stieltjes_from_companion(const SpectralModel& model, cplx z, cplx mbar) noexcept {
  const double y = model.ratio();
  return (mbar + (1.0 - y) / z) / y;
}

double mp_density(const SpectralModel& model, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorKind::DomainError, "density is evaluated at x > 0 only");
  }
  const double y = model.ratio();
  const double eps = kInversionOffset;
  const cplx z(x, eps);
  const cplx mbar = solve_companion_stieltjes(model, z).value;

  // Carry the root from x + i eps down to the real axis with Newton steps on
  // the same equation; the boundary value is the eps -> 0 limit. Inside the
  // support the real-axis roots form a conjugate pair, outside they are real.
  cplx m = mbar;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    const cplx g = x + 1.0 / m - h_integral_1(model, m);
    res = std::abs(g);
    if (res <= 1e-14 * std::max(1.0, x)) break;
    const cplx gp = -1.0 / (m * m) + h_integral_2(model, m);
    const cplx next = m - g / gp;
    if (!finite(next)) break;
    m = next;
  }
  if (res <= 1e-11 * std::max(1.0, x) && std::abs(m - mbar) <= 1e-2 * std::max(1.0, std::abs(mbar))) {
    return std::abs(m.imag()) / (kPi * y);
  }

  const cplx mf = stieltjes_from_companion(model, z, mbar);
  const double atom = std::max({0.0, 1.0 - 1.0 / y, model.zero_mass()});
  const double d = mf.imag() / kPi - atom * eps / (kPi * (x * x + eps * eps));
  return std::max(0.0, d);
}

SupportInterval mp_support(const SpectralModel& model) {
  const double y = model.ratio();
  const double atom = std::max({0.0, 1.0 - 1.0 / y, model.zero_mass()});
  const double sy = std::sqrt(y);
  if (model.is_point_mass()) {
    const double s2 = model.population()[0].location;
    // For y > 1 this is the continuous part; the atom is reported separately.
    return {s2 * (1.0 - sy) * (1.0 - sy), s2 * (1.0 + sy) * (1.0 + sy), atom};
  }

  constexpr int kGrid = 4096;
  constexpr double kFloor = 1e-8;
  const double top = 1.2 * (1.0 + sy) * (1.0 + sy) * model.max_atom();
  const double step = top / kGrid;
  auto above = [&](double x) { return mp_density(model, x) > kFloor; };

  int first = -1;
  int last = -1;
  for (int i = 1; i <= kGrid; ++i) {
    if (above(i * step)) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) {
    throw Error(ErrorKind::NonConvergence, "support scan found no density above the floor");
  }

  // Bisect each edge between the last grid point below the floor and the
  // first one above it.
  auto bisect = [&](double out, double in) {
    for (int k = 0; k < 60 && std::abs(in - out) > 1e-13 * std::max(1.0, in); ++k) {
      const double mid = 0.5 * (out + in);
      (above(mid) ? in : out) = mid;
    }
    return out;
  };
  const double lower = first == 1 ? 0.0 : bisect((first - 1) * step, first * step);
  const double upper = last == kGrid ? top : bisect((last + 1) * step, last * step);
  return {lower, upper, atom};
}

double mp_linear_functional(const SpectralModel& model, const SpectralFunction& g) {
  const SupportInterval s = mp_support(model);
  double result = 0.0;
  if (s.atom_at_zero > 0.0) {
    if (!g.defined_at(0.0)) {
      throw Error(ErrorKind::DomainError,
                  g.name() + " is undefined at 0 but the spectral law has an atom there");
    }
    result += s.atom_at_zero * g.real(0.0);
  }

  // x = a + (b-a)(1-cos t)/2 absorbs the square-root edge behaviour, including
  // the x^{-1/2} growth at the origin when y = 1.
  const double a = s.lower;
  const double w = s.upper - s.lower;
  auto integrand = [&](double t) {
    const double x = a + 0.5 * w * (1.0 - std::cos(t));
    if (!(x > 0.0)) return 0.0;
    const double rho = mp_density(model, x);
    if (rho == 0.0) return 0.0;
    return g.real(x) * rho * 0.5 * w * std::sin(t);
  };
  double err = 0.0;
  const double cont = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, kPi, 12, 1e-11, &err);
  return result + cont;
}

IdentityCentering identity_case_centering(double y) {
  if (!(y > 0.0) || !(y < 1.0)) {
    throw Error(ErrorKind::DomainError, "identity centering needs 0 < y < 1, got y = " +
                                            std::to_string(y));
  }
  const double l = std::log1p(-y);
  return {1.0 + (1.0 - y) / y * l, -0.5 * l, -2.0 * l - 2.0 * y};
}

}  // namespace spectral_clt
