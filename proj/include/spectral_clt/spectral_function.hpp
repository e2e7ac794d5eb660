#pragma once

#include <complex>
#include <functional>
#include <string>
#include <string_view>

namespace spectral_clt {

using cplx = std::complex<double>;

/// A test function for linear spectral statistics.
///
/// Contour functionals need the analytic continuation of g off the real axis,
/// so the primary representation is complex -> complex. Real evaluation goes
/// through the same callable and is rejected when the result is not a finite
/// real number (log of a nonpositive value, for instance).
///
/// The derivative is optional; only the MLE mean shift needs it.
class SpectralFunction {
 public:
  using Eval = std::function<cplx(cplx)>;

  SpectralFunction(std::string name, Eval value, Eval derivative = {});

  cplx operator()(cplx z) const { return value_(z); }

  /// Real evaluation. Throws DomainError if g(x) is not a finite real.
  double real(double x) const;

  /// True when g(x) is a finite real number.
  bool defined_at(double x) const noexcept;

  bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }
  cplx derivative(cplx z) const;

  const std::string& name() const noexcept { return name_; }

  /// x * g'(x), the integrand of the MLE mean shift.
  SpectralFunction times_x_derivative() const;

  // Built-ins.
  static SpectralFunction identity();
  static SpectralFunction square();
  static SpectralFunction log();
  /// x - log x - 1, the kernel of the one-sample likelihood ratio statistic.
  static SpectralFunction lrt_kernel();
  static SpectralFunction constant(double c);
  /// log(y1 + y2 x) - y2/(y1+y2) log x - log(y1+y2), the two-sample LRT kernel.
  static SpectralFunction fisher_lrt(double y1, double y2);

  /// Parses the CLI identifiers: "x", "x2", "log", "lrt" (alias "x-log(x)-1"), "1".
  static SpectralFunction from_name(std::string_view name);

  /// a*f + b*g; derivative present only when both have one.
  static SpectralFunction linear_combination(double a, const SpectralFunction& f, double b,
                                             const SpectralFunction& g);

 private:
  std::string name_;
  Eval value_;
  Eval derivative_;
};

}  // namespace spectral_clt
