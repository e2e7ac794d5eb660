#include "spectral_clt/clt_functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>
#include <boost/math/quadrature/gauss.hpp>

#include "spectral_clt/errors.hpp"

namespace spectral_clt {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// ---------------------------------------------------------------------------
// Circle quadrature

// Runs `eval(M)` for M = initial, 2 initial, ... until two successive values
// agree.
template <class Eval>
cplx adaptive_circle(const Eval& eval, const CircleQuadrature& quad, const char* what) {
  int M = quad.initial_nodes;
  cplx prev = eval(M);
  double change = 0.0;
  while (true) {
    const int next = 2 * M;
    if (next > quad.max_nodes) break;
    const cplx cur = eval(next);
    change = std::abs(cur - prev);
    prev = cur;
    M = next;
    if (change <= quad.target_tolerance * std::max(1.0, std::abs(cur))) return cur;
  }
  if (change > quad.failure_tolerance) {
    throw Error(ErrorKind::QuadratureNotConverged,
                std::string(what) + ": node doubling still changes the value by " +
                    std::to_string(change));
  }
  return prev;
}

std::vector<cplx> circle_nodes(int M, double rho) {
  std::vector<cplx> xi(M);
  for (int j = 0; j < M; ++j) xi[j] = std::polar(rho, 2.0 * kPi * j / M);
  return xi;
}

// (2 pi i)^{-1} \oint phi(xi) d xi on |xi| = rho with M trapezoid nodes.
template <class Phi>
cplx circle_mean(const Phi& phi, int M, double rho) {
  cplx s = 0.0;
  for (const cplx& xi : circle_nodes(M, rho)) s += phi(xi) * xi;
  return s / static_cast<double>(M);
}

// Laurent coefficients c_k, k = -M/2+1 .. M/2-1, of phi on the unit circle.
// Entry k >= 0 at index k, entry -k at index M - k.
std::vector<cplx> laurent(const std::function<cplx(cplx)>& phi, int M) {
  std::vector<cplx> v(M);
  const auto xi = circle_nodes(M, 1.0);
  for (int j = 0; j < M; ++j) v[j] = phi(xi[j]);
  Eigen::FFT<double> fft;
  std::vector<cplx> c;
  fft.fwd(c, v);
  for (auto& x : c) x /= static_cast<double>(M);
  return c;
}

// sum_{k>=1} k a_{-k} b_k: the double circle integral
// -(4 pi^2)^{-1} \oint\oint F(xi1) G(xi2) / (xi1 - xi2)^2 with |xi1| < |xi2|.
double laurent_pairing(const std::function<cplx(cplx)>& F, const std::function<cplx(cplx)>& G,
                       const CircleQuadrature& quad, const char* what) {
  auto eval = [&](int M) {
    const auto a = laurent(F, M);
    const auto b = laurent(G, M);
    cplx s = 0.0;
    for (int k = 1; k < M / 2; ++k) s += static_cast<double>(k) * a[M - k] * b[k];
    return s;
  };
  return adaptive_circle(eval, quad, what).real();
}

void check_ratio(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw Error(ErrorKind::InvalidArgument, "ratio must be positive");
  if (y == 1.0) throw Error(ErrorKind::DomainError, "unit-circle forms need y != 1");
}

double min_h(double h) { return std::min(h, 1.0 / h); }

// f((1 + h xi)(1 + h / xi) / scale)
std::function<cplx(cplx)> circle_image(const SpectralFunction& f, double h, double scale) {
  return [&f, h, scale](cplx xi) { return f((1.0 + h * xi) * (1.0 + h / xi) / scale); };
}

// ---------------------------------------------------------------------------
// Rectangle contours

struct Node {
  cplx z;
  cplx w;
};

struct Rect {
  double xl;
  double xr;
  double nu;
};

double segment_distance(cplx p, cplx a, cplx b) {
  const cplx d = b - a;
  const double t = std::clamp(((p - a) * std::conj(d)).real() / std::norm(d), 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

double rect_distance(cplx p, const Rect& r) {
  const cplx c[4] = {{r.xl, -r.nu}, {r.xr, -r.nu}, {r.xr, r.nu}, {r.xl, r.nu}};
  double d = segment_distance(p, c[0], c[1]);
  for (int s = 1; s < 4; ++s) d = std::min(d, segment_distance(p, c[s], c[(s + 1) % 4]));
  return d;
}

// Singular set seen by one contour: the support, the pole of the companion
// transform at 0 when y < 1, and the other contour of the pair.
struct Singularities {
  double a;
  double b;
  bool pole_at_zero;
  Rect other;

  double distance(cplx p) const {
    const double x = std::clamp(p.real(), a, b);
    double d = std::abs(p - cplx(x, 0.0));
    if (pole_at_zero) d = std::min(d, std::abs(p));
    return std::min(d, rect_distance(p, other));
  }
};

void add_panels(cplx s0, cplx s1, const Singularities& sing, double ratio, int depth,
                std::vector<Node>& out) {
  const double len = std::abs(s1 - s0);
  double d = sing.distance(s0);
  for (int k = 1; k <= 8; ++k) d = std::min(d, sing.distance(s0 + (s1 - s0) * (k / 8.0)));
  if (len > ratio * d && depth < 40) {
    const cplx mid = 0.5 * (s0 + s1);
    add_panels(s0, mid, sing, ratio, depth + 1, out);
    add_panels(mid, s1, sing, ratio, depth + 1, out);
    return;
  }
  using GL = boost::math::quadrature::gauss<double, 16>;
  const cplx c = 0.5 * (s0 + s1);
  const cplx h = 0.5 * (s1 - s0);
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  for (std::size_t i = x.size(); i-- > 0;) out.push_back({c - h * x[i], h * w[i]});
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back({c + h * x[i], h * w[i]});
}

// Counterclockwise rectangle.
std::vector<Node> rectangle_nodes(const Rect& r, const Singularities& sing, double ratio) {
  const cplx c[4] = {{r.xl, -r.nu}, {r.xr, -r.nu}, {r.xr, r.nu}, {r.xl, r.nu}};
  std::vector<Node> out;
  for (int s = 0; s < 4; ++s) add_panels(c[s], c[(s + 1) % 4], sing, ratio, 0, out);
  return out;
}

struct ContourPair {
  Rect inner;
  Rect outer;
  Singularities inner_sing;
  Singularities outer_sing;
};

ContourPair make_contours(const SpectralModel& model, const ContourSpec& spec) {
  const SupportInterval s = mp_support(model);
  const double a = s.lower;
  const double b = s.upper;
  const double W = b - a;
  auto rect = [&](double margin, double cap, double nu) {
    const double xl = a > 0.0 ? a - std::min(margin * W, cap * a) : a - margin * W;
    return Rect{xl, b + margin * W, nu};
  };
  const Rect inner = rect(spec.inner_margin, spec.inner_left_cap, spec.inner_half_height);
  const Rect outer = rect(spec.outer_margin, spec.outer_left_cap, spec.outer_half_height);
  const bool pole = model.ratio() < 1.0;
  ContourPair cp{inner, outer, {a, b, pole, outer}, {a, b, pole, inner}};
  if (!(cp.inner.xl > cp.outer.xl && cp.inner.xr < cp.outer.xr &&
        cp.inner.nu < cp.outer.nu && cp.inner.xl < a && cp.inner.xr > b)) {
    throw Error(ErrorKind::InvalidArgument, "contour specification does not nest around the support");
  }
  return cp;
}

struct NodeValues {
  std::vector<Node> nodes;
  std::vector<cplx> m;
  std::vector<cplx> dm;
};

NodeValues solve_on(const SpectralModel& model, std::vector<Node> nodes) {
  NodeValues v{std::move(nodes), {}, {}};
  v.m.reserve(v.nodes.size());
  v.dm.reserve(v.nodes.size());
  std::optional<cplx> guess;
  for (const auto& n : v.nodes) {
    if (guess && (guess->imag() > 0.0) != (n.z.imag() > 0.0)) guess.reset();
    const cplx m = solve_companion_stieltjes(model, n.z, {}, guess).value;
    v.m.push_back(m);
    v.dm.push_back(companion_derivative_from_value(model, m));
    guess = m;
  }
  return v;
}

template <class Eval>
double refine(const Eval& eval, const ContourSpec& spec, const char* what) {
  double ratio = spec.panel_ratio;
  double prev = eval(ratio);
  double change = 0.0;
  for (int level = 0; level < spec.max_refinements; ++level) {
    ratio *= 0.5;
    const double cur = eval(ratio);
    change = std::abs(cur - prev);
    prev = cur;
    if (change <= spec.target_tolerance * std::max(1.0, std::abs(cur))) return cur;
  }
  if (change > spec.failure_tolerance) {
    throw Error(ErrorKind::QuadratureNotConverged,
                std::string(what) + ": panel refinement still changes the value by " +
                    std::to_string(change));
  }
  return prev;
}

}  // namespace

void MomentParams::validate() const {
  if (kappa != 1 && kappa != 2) throw Error(ErrorKind::InvalidArgument, "kappa must be 1 or 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
  }
  if (kappa == 2 && alpha != 1.0) {
    throw Error(ErrorKind::InvalidArgument, "real data (kappa = 2) has alpha = 1");
  }
  if (!(beta >= -2.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidArgument, "beta must be at least -2");
  }
}

// ---------------------------------------------------------------------------
// Identity population, unit-circle forms

double contour_I1(const SpectralFunction& f, double y, const CircleQuadrature& quad) {
  check_ratio(y);
  const double h = std::sqrt(y);
  const double rho = std::pow(min_h(h), -1.0 / 3.0);
  const auto F = circle_image(f, h, 1.0);
  auto eval = [&](int M) {
    return circle_mean([&](cplx xi) { return F(xi) * (xi / (xi * xi - 1.0) - 1.0 / xi); }, M, rho);
  };
  return adaptive_circle(eval, quad, "I1").real();
}

double contour_I2(const SpectralFunction& f, double y, const CircleQuadrature& quad) {
  check_ratio(y);
  const auto F = circle_image(f, std::sqrt(y), 1.0);
  auto eval = [&](int M) {
    return circle_mean([&](cplx xi) { return F(xi) / (xi * xi * xi); }, M, 1.0);
  };
  return adaptive_circle(eval, quad, "I2").real();
}

double contour_J1(const SpectralFunction& f, const SpectralFunction& g, double y,
                  const CircleQuadrature& quad) {
  check_ratio(y);
  const double h = std::sqrt(y);
  return laurent_pairing(circle_image(f, h, 1.0), circle_image(g, h, 1.0), quad, "J1");
}

double contour_J2(const SpectralFunction& f, const SpectralFunction& g, double y,
                  const CircleQuadrature& quad) {
  check_ratio(y);
  const double h = std::sqrt(y);
  auto first = [&](const SpectralFunction& u) {
    const auto U = circle_image(u, h, 1.0);
    auto eval = [&](int M) {
      return circle_mean([&](cplx xi) { return U(xi) / (xi * xi); }, M, 1.0);
    };
    return adaptive_circle(eval, quad, "J2");
  };
  return (first(f) * first(g)).real();
}

double identity_lss_mean(const SpectralFunction& f, double y, const MomentParams& mp,
                         const CircleQuadrature& quad) {
  mp.validate();
  double v = 0.0;
  if (mp.kappa != 1) v += (mp.kappa - 1) * contour_I1(f, y, quad);
  if (mp.beta != 0.0) v += mp.beta * contour_I2(f, y, quad);
  return v;
}

double identity_lss_cov(const SpectralFunction& f, const SpectralFunction& g, double y,
                        const MomentParams& mp, const CircleQuadrature& quad) {
  mp.validate();
  double v = mp.kappa * contour_J1(f, g, y, quad);
  if (mp.beta != 0.0) v += mp.beta * contour_J2(f, g, y, quad);
  return v;
}

// ---------------------------------------------------------------------------
// General discrete population, rectangle contours

double lss_mean_general(const SpectralFunction& f, const SpectralModel& model,
                        const MomentParams& mp, const ContourSpec& contour) {
  mp.validate();
  if (mp.alpha == 0.0 && mp.beta == 0.0) return 0.0;
  const ContourPair cp = make_contours(model, contour);
  const double y = model.ratio();
  const auto pop = model.population();

  auto eval = [&](double ratio) {
    const NodeValues v = solve_on(model, rectangle_nodes(cp.inner, cp.inner_sing, ratio));
    cplx s = 0.0;
    for (std::size_t i = 0; i < v.nodes.size(); ++i) {
      const cplx m = v.m[i];
      cplx A = 0.0;
      cplx B = 0.0;
      for (const auto& at : pop) {
        const double t = at.location;
        const cplx d = 1.0 + t * m;
        A += at.weight * m * m * t * t / (d * d);
        B += at.weight * m * m * m * t * t / (d * d * d);
      }
      A *= y;
      B *= y;
      const cplx k = mp.alpha * B / ((1.0 - A) * (1.0 - mp.alpha * A)) + mp.beta * B / (1.0 - A);
      s += f(v.nodes[i].z) * k * v.nodes[i].w;
    }
    return (-s / (2.0 * kPi * kI)).real();
  };
  return refine(eval, contour, "lss_mean_general");
}

double lss_cov_general(const SpectralFunction& f, const SpectralFunction& g,
                       const SpectralModel& model, const MomentParams& mp,
                       const ContourSpec& contour) {
  mp.validate();
  const ContourPair cp = make_contours(model, contour);
  const double y = model.ratio();
  const auto pop = model.population();
  const double alpha = mp.alpha;

  auto eval = [&](double ratio) {
    const NodeValues v1 = solve_on(model, rectangle_nodes(cp.inner, cp.inner_sing, ratio));
    const NodeValues v2 = solve_on(model, rectangle_nodes(cp.outer, cp.outer_sing, ratio));
    std::vector<cplx> F(v1.nodes.size());
    std::vector<cplx> G(v2.nodes.size());
    for (std::size_t i = 0; i < F.size(); ++i) F[i] = f(v1.nodes[i].z) * v1.nodes[i].w;
    for (std::size_t j = 0; j < G.size(); ++j) G[j] = g(v2.nodes[j].z) * v2.nodes[j].w;

    cplx total = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const cplx z1 = v1.nodes[i].z;
      const cplx m1 = v1.m[i];
      const cplx p1 = v1.dm[i];
      const cplx w1 = 1.0 / m1;
      const cplx w1p = -p1 / (m1 * m1);
      cplx row = 0.0;
      for (std::size_t j = 0; j < G.size(); ++j) {
        const cplx z2 = v2.nodes[j].z;
        const cplx m2 = v2.m[j];
        const cplx p2 = v2.dm[j];
        const cplx dmm = m1 - m2;
        // -(m1' m2')/(m1 - m2)^2
        cplx k = -p1 * p2 / (dmm * dmm);
        if (mp.beta != 0.0) {
          cplx hk = 0.0;
          for (const auto& at : pop) {
            const double t = at.location;
            const cplx d1 = m1 * t + 1.0;
            const cplx d2 = m2 * t + 1.0;
            hk += at.weight * t * t / (d1 * d1 * d2 * d2);
          }
          k -= y * mp.beta * hk * p1 * p2;
        }
        if (alpha != 0.0) {
          // d^2/dz1 dz2 log(1 - a(z1, z2)) with 1 - a = 1 - alpha - alpha u and
          // u = (z1 - z2)/(1/m1 - 1/m2).
          const cplx w2 = 1.0 / m2;
          const cplx w2p = -p2 / (m2 * m2);
          const cplx D = w1 - w2;
          const cplx dz = z1 - z2;
          const cplx u = dz / D;
          const cplx u1 = (D - dz * w1p) / (D * D);
          const cplx u2 = (-D + dz * w2p) / (D * D);
          const cplx u12 = (w1p - w2p) / (D * D) + (D - dz * w1p) * 2.0 * w2p / (D * D * D);
          const cplx om = 1.0 - alpha - alpha * u;
          if (std::abs(om) < 1e-10) {
            throw Error(ErrorKind::KernelSingularity,
                        "|1 - a(z1, z2)| < 1e-10 on the contour pair");
          }
          k += (-alpha * u12 * om - alpha * alpha * u1 * u2) / (om * om);
        }
        row += k * G[j];
      }
      total += F[i] * row;
    }
    return (total / (4.0 * kPi * kPi)).real();
  };
  return refine(eval, contour, "lss_cov_general");
}

cplx a_kernel(cplx z1, cplx z2, const SpectralModel& model, double alpha) {
  if (alpha == 0.0) return 0.0;
  const cplx m1 = solve_companion_stieltjes(model, z1).value;
  if (z1 == z2) {
    const cplx dm = companion_derivative_from_value(model, m1);
    return alpha * (1.0 - m1 * m1 / dm);
  }
  const cplx m2 = solve_companion_stieltjes(model, z2).value;
  if (std::abs(m2 - m1) <= 1e-15 * std::max(std::abs(m1), std::abs(m2))) {
    throw Error(ErrorKind::DegenerateKernel, "companion transform coincides at distinct points");
  }
  return alpha * (1.0 + m1 * m2 * (z1 - z2) / (m2 - m1));
}

double mle_mean_shift(const SpectralFunction& g, const SpectralModel& model) {
  return -model.ratio() * mp_linear_functional(model, g.times_x_derivative());
}

// ---------------------------------------------------------------------------
// Fisher matrices

FisherModel::FisherModel(double y1, double y2) : y1_(y1), y2_(y2) {
  if (!(y1 > 0.0) || !std::isfinite(y1)) {
    throw Error(ErrorKind::InvalidArgument, "Fisher model needs y1 > 0");
  }
  if (!(y2 > 0.0 && y2 < 1.0)) throw Error(ErrorKind::DomainError, "Fisher model needs 0 < y2 < 1");
  h_ = std::sqrt(y1 + y2 - y1 * y2);
}

double FisherModel::lower_edge() const noexcept {
  return (1.0 - h_) * (1.0 - h_) / ((1.0 - y2_) * (1.0 - y2_));
}

double FisherModel::upper_edge() const noexcept {
  return (1.0 + h_) * (1.0 + h_) / ((1.0 - y2_) * (1.0 - y2_));
}

double fisher_lss_mean(const SpectralFunction& f, const FisherModel& fm, const MomentParams& mpx,
                       const MomentParams& mpy, const CircleQuadrature& quad) {
  mpx.validate();
  mpy.validate();
  if (mpx.kappa != mpy.kappa) {
    throw Error(ErrorKind::InvalidArgument, "both samples must share kappa");
  }
  const double y1 = fm.y1();
  const double y2 = fm.y2();
  const double h = fm.h();
  if (h == 1.0) throw Error(ErrorKind::DomainError, "Fisher forms need h != 1");
  const double c = y2 / h;
  const double s = std::sqrt(y2) / h;
  const auto F = circle_image(f, h, (1.0 - y2) * (1.0 - y2));

  double v = 0.0;
  if (mpx.kappa != 1) {
    const double rho = std::pow(min_h(h), -1.0 / 3.0);
    auto eval = [&](int M) {
      return circle_mean(
          [&](cplx xi) { return F(xi) * (1.0 / (xi - 1.0) + 1.0 / (xi + 1.0) - 2.0 / (xi + c)); },
          M, rho);
    };
    v += 0.5 * (mpx.kappa - 1) * adaptive_circle(eval, quad, "fisher mean").real();
  }
  if (mpx.beta != 0.0) {
    auto eval = [&](int M) {
      return circle_mean([&](cplx xi) { return F(xi) / std::pow(xi + c, 3); }, M, 1.0);
    };
    v += mpx.beta * y1 * (1.0 - y2) * (1.0 - y2) / (h * h) *
         adaptive_circle(eval, quad, "fisher mean").real();
  }
  if (mpy.beta != 0.0) {
    auto eval = [&](int M) {
      return circle_mean(
          [&](cplx xi) {
            const cplx q = xi + c;
            return F(xi) * (xi * xi - y2 / (h * h)) / (q * q) *
                   (1.0 / (xi - s) + 1.0 / (xi + s) - 2.0 / q);
          },
          M, 1.0);
    };
    v += 0.5 * mpy.beta * (1.0 - y2) * adaptive_circle(eval, quad, "fisher mean").real();
  }
  return v;
}

double fisher_lss_cov(const SpectralFunction& f, const SpectralFunction& g, const FisherModel& fm,
                      const MomentParams& mpx, const MomentParams& mpy,
                      const CircleQuadrature& quad) {
  mpx.validate();
  mpy.validate();
  if (mpx.kappa != mpy.kappa) {
    throw Error(ErrorKind::InvalidArgument, "both samples must share kappa");
  }
  const double y1 = fm.y1();
  const double y2 = fm.y2();
  const double h = fm.h();
  if (h == 1.0) throw Error(ErrorKind::DomainError, "Fisher forms need h != 1");
  const double scale = (1.0 - y2) * (1.0 - y2);
  const auto F = circle_image(f, h, scale);
  const auto G = circle_image(g, h, scale);

  double v = mpx.kappa * laurent_pairing(F, G, quad, "fisher cov");
  const double weight = mpx.beta * y1 + mpy.beta * y2;
  if (weight != 0.0) {
    const double c = y2 / h;
    auto first = [&](const std::function<cplx(cplx)>& U) {
      auto eval = [&](int M) {
        return circle_mean([&](cplx xi) { return U(xi) / ((xi + c) * (xi + c)); }, M, 1.0);
      };
      return adaptive_circle(eval, quad, "fisher cov");
    };
    v += weight * scale / (h * h) * (first(F) * first(G)).real();
  }
  return v;
}

}  // namespace spectral_clt
