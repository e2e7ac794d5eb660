#include "spectral_clt/spectral_function.hpp"

#include <cmath>
#include <utility>

#include "spectral_clt/errors.hpp"

namespace spectral_clt {

SpectralFunction::SpectralFunction(std::string name, Eval value, Eval derivative)
    : name_(std::move(name)), value_(std::move(value)), derivative_(std::move(derivative)) {
  if (!value_) throw Error(ErrorKind::InvalidArgument, "spectral function '" + name_ + "' is empty");
}

double SpectralFunction::real(double x) const {
  const cplx v = value_(cplx(x, 0.0));
  if (!std::isfinite(v.real()) || v.imag() != 0.0) {
    throw Error(ErrorKind::DomainError,
                name_ + " is not defined at x = " + std::to_string(x));
  }
  return v.real();
}

bool SpectralFunction::defined_at(double x) const noexcept {
  try {
    const cplx v = value_(cplx(x, 0.0));
    return std::isfinite(v.real()) && v.imag() == 0.0;
  } catch (...) {
    return false;
  }
}

cplx SpectralFunction::derivative(cplx z) const {
  if (!derivative_) {
    throw Error(ErrorKind::InvalidArgument, "spectral function '" + name_ + "' has no derivative");
  }
  return derivative_(z);
}

SpectralFunction SpectralFunction::times_x_derivative() const {
  if (!derivative_) {
    throw Error(ErrorKind::InvalidArgument, "spectral function '" + name_ + "' has no derivative");
  }
  auto d = derivative_;
  return SpectralFunction("x*d(" + name_ + ")", [d](cplx z) { return z * d(z); });
}

SpectralFunction SpectralFunction::identity() {
  return {"x", [](cplx z) { return z; }, [](cplx) { return cplx(1.0); }};
}

SpectralFunction SpectralFunction::square() {
  return {"x2", [](cplx z) { return z * z; }, [](cplx z) { return 2.0 * z; }};
}

SpectralFunction SpectralFunction::log() {
  return {"log", [](cplx z) { return std::log(z); }, [](cplx z) { return 1.0 / z; }};
}

SpectralFunction SpectralFunction::lrt_kernel() {
  return {"lrt", [](cplx z) { return z - std::log(z) - 1.0; },
          [](cplx z) { return 1.0 - 1.0 / z; }};
}

SpectralFunction SpectralFunction::constant(double c) {
  return {"const", [c](cplx) { return cplx(c); }, [](cplx) { return cplx(0.0); }};
}

SpectralFunction SpectralFunction::fisher_lrt(double y1, double y2) {
  if (!(y1 > 0) || !(y2 > 0)) {
    throw Error(ErrorKind::InvalidArgument, "fisher_lrt needs positive ratios");
  }
  const double s = y1 + y2;
  const double w = y2 / s;
  const double ls = std::log(s);
  return {"fisher_lrt",
          [=](cplx z) { return std::log(y1 + y2 * z) - w * std::log(z) - ls; },
          [=](cplx z) { return y2 / (y1 + y2 * z) - w / z; }};
}

SpectralFunction SpectralFunction::from_name(std::string_view name) {
  if (name == "x") return identity();
  if (name == "x2" || name == "x^2") return square();
  if (name == "log" || name == "log(x)") return log();
  if (name == "lrt" || name == "x-log(x)-1") return lrt_kernel();
  if (name == "1") return constant(1.0);
  throw Error(ErrorKind::InvalidArgument, "unknown function '" + std::string(name) + "'");
}

SpectralFunction SpectralFunction::linear_combination(double a, const SpectralFunction& f,
                                                      double b, const SpectralFunction& g) {
  Eval value = [a, b, fv = f.value_, gv = g.value_](cplx z) { return a * fv(z) + b * gv(z); };
  Eval deriv;
  if (f.derivative_ && g.derivative_) {
    deriv = [a, b, fd = f.derivative_, gd = g.derivative_](cplx z) {
      return a * fd(z) + b * gd(z);
    };
  }
  return {std::to_string(a) + "*" + f.name_ + "+" + std::to_string(b) + "*" + g.name_,
          std::move(value), std::move(deriv)};
}

}  // namespace spectral_clt
