#include "spectral_clt/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "spectral_clt/errors.hpp"

namespace spectral_clt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Holds the distribution objects so that repeated draws reuse their state.
class InnovationSampler {
 public:
  InnovationSampler(Family family, double tau) : family_(family), mix_(tau) {}

  cplx operator()(std::mt19937_64& rng) {
    switch (family_) {
      case Family::RealGaussian: return normal_(rng);
      case Family::ComplexGaussian: return cplx(normal_(rng), normal_(rng)) * kInvSqrt2;
      case Family::MixtureA1:
        if (mix_(rng)) return cplx(kHalfSqrt3 * normal_(rng), 0.5 * normal_(rng));
        return cplx(kHalfSqrt3 * sign(rng), 0.5 * sign(rng));
      case Family::MixtureA2:
        if (mix_(rng)) return cplx(normal_(rng), normal_(rng)) * kInvSqrt2;
        return cplx(sign(rng), sign(rng)) * kInvSqrt2;
      case Family::ScaledT5: return kT5Scale * student_(rng);
    }
    return 0.0;
  }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  static constexpr double kHalfSqrt3 = 0.86602540378443864676;
  static constexpr double kT5Scale = 0.77459666924148337704;  // sqrt(3/5)

  double sign(std::mt19937_64& rng) { return coin_(rng) ? 1.0 : -1.0; }

  Family family_;
  std::bernoulli_distribution mix_;
  std::bernoulli_distribution coin_{0.5};
  std::normal_distribution<double> normal_;
  std::student_t_distribution<double> student_{5.0};
};

// Runs fn(rep) for every replication on a pool of workers and returns the
// results in replication order.
template <class Fn>
std::vector<double> run_replications(int reps, unsigned threads, const Fn& fn) {
  std::vector<double> out(static_cast<std::size_t>(reps));
  const unsigned workers = std::min<unsigned>(worker_count(threads), std::max(1, reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (int r = next++; r < reps; r = next++) out[static_cast<std::size_t>(r)] = fn(r);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = reps;
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

void check_reps(int reps) {
  if (reps < 2) {
    throw Error(ErrorKind::InvalidArgument, "at least 2 replications are needed for a variance");
  }
}

PopulationSpec with_dimension(PopulationSpec spec, Eigen::Index p) {
  if (spec.loading.size() == 0 && spec.mean.size() == 0) spec.p = p;
  if (spec.p != p) throw Error(ErrorKind::ShapeMismatch, "population dimension differs from p");
  spec.validate();
  return spec;
}

double rejection_share(const std::vector<double>& stats, const CenteringTerms& t, double level) {
  std::size_t rejected = 0;
  for (double s : stats) {
    const double z = (s - t.centering - t.mean_correction) / std::sqrt(t.variance);
    if (normal_p_value(z, false) < level) ++rejected;
  }
  return static_cast<double>(rejected) / static_cast<double>(stats.size());
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::RealGaussian: return "real_gaussian";
    case Family::ComplexGaussian: return "complex_gaussian";
    case Family::MixtureA1: return "mixture_A1";
    case Family::MixtureA2: return "mixture_A2";
    case Family::ScaledT5: return "scaled_t5";
  }
  return "unknown";
}

bool is_complex(Family f) noexcept {
  return f == Family::ComplexGaussian || f == Family::MixtureA1 || f == Family::MixtureA2;
}

InnovationMoments family_moments(Family f, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must lie in [0, 1]");
  switch (f) {
    case Family::RealGaussian: return {1.0, 3.0, {2, 1.0, 0.0}};
    case Family::ComplexGaussian: return {0.0, 2.0, {1, 0.0, 0.0}};
    case Family::MixtureA1: {
      // |X|^2 = 3/4 A^2 + 1/4 B^2 with E A^4 = E B^4 = 3 (normal) or 1 (sign).
      const double fourth = tau * (27.0 + 6.0 + 3.0) / 16.0 + (1.0 - tau) * (9.0 + 6.0 + 1.0) / 16.0;
      return {0.5, fourth, {1, 0.25, fourth - 0.25 - 2.0}};
    }
    case Family::MixtureA2: return {0.0, 1.0 + tau, {1, 0.0, tau - 1.0}};
    case Family::ScaledT5: return {1.0, 9.0, {2, 1.0, 6.0}};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown family");
}

void PopulationSpec::validate() const {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "population dimension must be positive");
  if (loading.size() != 0 && (loading.rows() != p || loading.cols() != p)) {
    throw Error(ErrorKind::ShapeMismatch, "loading must be p x p");
  }
  if (mean.size() != 0 && mean.size() != p) {
    throw Error(ErrorKind::ShapeMismatch, "mean must have length p");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must lie in [0, 1]");
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ splitmix64(rep + 0x632be59bd9b4e019ULL));
  s = splitmix64(s ^ splitmix64(stream + 0xd1b54a32d192ed03ULL));
  return std::mt19937_64(s);
}

cplx draw_innovation(Family f, double tau, std::mt19937_64& rng) {
  InnovationSampler sampler(f, tau);
  return sampler(rng);
}

Eigen::MatrixXcd sample_population_complex(const PopulationSpec& spec, Eigen::Index n,
                                           std::uint64_t seed, std::uint64_t stream) {
  spec.validate();
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  auto rng = make_engine(seed, 0, stream);
  InnovationSampler draw(spec.family, spec.tau);
  Eigen::MatrixXcd Z(n, spec.p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < spec.p; ++j) Z(i, j) = draw(rng);
  }
  if (spec.loading.size() != 0) Z = (Z * spec.loading.transpose()).eval();
  if (spec.mean.size() != 0) Z.rowwise() += spec.mean.transpose();
  return Z;
}

Eigen::MatrixXd sample_population(const PopulationSpec& spec, Eigen::Index n, std::uint64_t seed,
                                  std::uint64_t stream) {
  spec.validate();
  if (is_complex(spec.family)) {
    throw Error(ErrorKind::InvalidArgument,
                "family " + std::string(to_string(spec.family)) + " produces complex data");
  }
  if ((spec.loading.size() != 0 && spec.loading.imag().cwiseAbs().maxCoeff() != 0.0) ||
      (spec.mean.size() != 0 && spec.mean.imag().cwiseAbs().maxCoeff() != 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "complex loading or mean for real data");
  }
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  auto rng = make_engine(seed, 0, stream);
  InnovationSampler draw(spec.family, spec.tau);
  Eigen::MatrixXd Z(n, spec.p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < spec.p; ++j) Z(i, j) = draw(rng).real();
  }
  if (spec.loading.size() != 0) Z = (Z * spec.loading.real().transpose()).eval();
  if (spec.mean.size() != 0) Z.rowwise() += spec.mean.real().transpose();
  return Z;
}

unsigned worker_count(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECTRAL_CLT_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

AnalyticPair pairwise_mean_variance(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "at least 2 values are needed for a variance");
  }
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values.data(), values.size()) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  return {mean, pairwise_sum(sq.data(), sq.size()) / (n - 1.0)};
}

SimulationSummary simulate_identity_table(Eigen::Index p, Eigen::Index n, int reps,
                                          const PopulationSpec& spec, std::uint64_t seed,
                                          const SimulationOptions& options) {
  check_reps(reps);
  if (!(p < n - 1)) throw Error(ErrorKind::DomainError, "identity table needs p < n - 1");
  const PopulationSpec ps = with_dimension(spec, p);
  const MomentParams mp = family_moments(ps.family, ps.tau).params;
  const CenteringTerms adj = identity_test_terms(p, n, mp, SizeConvention::Adjusted);
  const CenteringTerms raw = identity_test_terms(p, n, mp, SizeConvention::Raw);

  const auto stats = run_replications(reps, options.threads, [&](int r) {
    const Eigen::MatrixXd X = sample_population(ps, n, seed ^ splitmix64(static_cast<std::uint64_t>(r)), 0);
    const Eigen::MatrixXd S = unbiased_cov(X).matrix;
    return S.trace() - log_det_spd(S) - static_cast<double>(p);
  });

  SimulationSummary s;
  s.p = p;
  s.n = n;
  s.replications = reps;
  s.seed = seed;
  const AnalyticPair e = pairwise_mean_variance(stats);
  s.empirical_mean = e.mean;
  s.empirical_variance = e.variance;
  s.analytic_adjusted = {adj.centering + adj.mean_correction, adj.variance};
  s.analytic_raw = {raw.centering + raw.mean_correction, raw.variance};
  s.level = options.level;
  s.rejection_rate = rejection_share(stats, adj, options.level);
  return s;
}

SimulationSummary simulate_equality_table(Eigen::Index p, Eigen::Index n, Eigen::Index m, int reps,
                                          const PopulationSpec& spec_x,
                                          const PopulationSpec& spec_y, std::uint64_t seed,
                                          const SimulationOptions& options) {
  check_reps(reps);
  if (!(p < n - 1 && p < m - 1)) {
    throw Error(ErrorKind::DomainError, "equality table needs p < min(n, m) - 1");
  }
  const PopulationSpec px = with_dimension(spec_x, p);
  const PopulationSpec py = with_dimension(spec_y, p);
  const MomentParams mpx = family_moments(px.family, px.tau).params;
  const MomentParams mpy = family_moments(py.family, py.tau).params;
  const CenteringTerms adj = equality_test_terms(p, n, m, mpx, mpy, SizeConvention::Adjusted);
  const CenteringTerms raw = equality_test_terms(p, n, m, mpx, mpy, SizeConvention::Raw);

  const double wn = effective_size(n, SizeConvention::Adjusted);
  const double wm = effective_size(m, SizeConvention::Adjusted);
  const auto stats = run_replications(reps, options.threads, [&](int r) {
    const std::uint64_t key = seed ^ splitmix64(static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd X = sample_population(px, n, key, 0);
    const Eigen::MatrixXd Y = sample_population(py, m, key, 1);
    return clrt_equality_statistic(unbiased_cov(X).matrix, unbiased_cov(Y).matrix, wn, wm);
  });

  SimulationSummary s;
  s.p = p;
  s.n = n;
  s.m = m;
  s.replications = reps;
  s.seed = seed;
  const AnalyticPair e = pairwise_mean_variance(stats);
  s.empirical_mean = e.mean;
  s.empirical_variance = e.variance;
  s.analytic_adjusted = {adj.centering + adj.mean_correction, adj.variance};
  s.analytic_raw = {raw.centering + raw.mean_correction, raw.variance};
  s.level = options.level;
  s.rejection_rate = rejection_share(stats, adj, options.level);
  return s;
}

std::vector<std::pair<int, int>> table1_grid() {
  return {{25, 50}, {50, 100}, {100, 200}, {150, 300}, {32, 40}, {64, 80}, {96, 120}, {128, 160}};
}

std::vector<std::pair<int, int>> table2_grid() {
  return {{20, 40}, {50, 100}, {80, 160}, {20, 25}, {60, 75}, {100, 125}};
}

std::string_view to_string(Counterexample e) noexcept {
  switch (e) {
    case Counterexample::A1: return "A1";
    case Counterexample::A2: return "A2";
    case Counterexample::A3: return "A3";
  }
  return "unknown";
}

Counterexample counterexample_from_string(std::string_view s) {
  if (s == "A1" || s == "a1") return Counterexample::A1;
  if (s == "A2" || s == "a2") return Counterexample::A2;
  if (s == "A3" || s == "a3") return Counterexample::A3;
  throw Error(ErrorKind::InvalidArgument, "unknown counterexample '" + std::string(s) + "'");
}

Family counterexample_family(Counterexample e) noexcept {
  switch (e) {
    case Counterexample::A1: return Family::MixtureA1;
    case Counterexample::A2: return Family::MixtureA2;
    case Counterexample::A3: return Family::ScaledT5;
  }
  return Family::RealGaussian;
}

Eigen::Matrix2cd counterexample_block(const CounterexampleConfig& config) {
  // Rows of U^* as displayed with each example; Gamma = L^{1/2} U.
  Eigen::Matrix2cd u_star;
  if (config.example == Counterexample::A1) {
    const cplx e1 = std::polar(1.0, config.theta1);
    const cplx e2 = std::polar(1.0, config.theta);
    u_star << 1.0, e1, e2, -e1 * e2;
    u_star /= std::sqrt(2.0);
  } else {
    const double c = std::cos(config.theta);
    const double s = std::sin(config.theta);
    u_star << c, s, -s, c;
  }
  Eigen::Matrix2cd l_half = Eigen::Matrix2cd::Zero();
  l_half(0, 0) = 1.0;
  l_half(1, 1) = std::sqrt(2.0);
  return l_half * u_star.adjoint();
}

double counterexample_reference_formula(const CounterexampleConfig& config) {
  const double m = config.m_half;
  const double n = config.n;
  const double c = std::cos(config.theta);
  const double s = std::sin(config.theta);
  switch (config.example) {
    case Counterexample::A1:
      return (6.0 * (config.tau - 1.0) * m + 5.0 * m) / n +
             m * (18.0 + 2.0 * std::cos(2.0 * config.theta)) / (16.0 * n);
    case Counterexample::A2:
      return 5.0 * m / n + m * (config.tau - 1.0) * (17.0 - 18.0 * c * c * s * s) / n;
    case Counterexample::A3: return 10.0 * m / n + 6.0 * m * (17.0 - 18.0 * c * c * s * s) / n;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double counterexample_exact_variance(const CounterexampleConfig& config) {
  const Eigen::Matrix2cd G = counterexample_block(config);
  const Eigen::Matrix2cd T = G.adjoint() * G;
  const InnovationMoments mo = family_moments(counterexample_family(config.example), config.tau);
  const double sigma2 = std::norm(mo.second);
  const double beta = mo.fourth - sigma2 - 2.0;
  const double diag = std::norm(T(0, 0)) + std::norm(T(1, 1));
  const double hs = (T * T.adjoint()).trace().real();
  const double tt = (T * T.transpose()).trace().real();
  return config.m_half * (beta * diag + hs + sigma2 * tt) / config.n;
}

CounterexampleResult counterexample_variance(const CounterexampleConfig& config,
                                             const SimulationOptions& options) {
  if (config.m_half < 1 || config.n < 1) {
    throw Error(ErrorKind::InvalidArgument, "counterexample needs m_half >= 1 and n >= 1");
  }
  CounterexampleResult out{counterexample_reference_formula(config),
                           counterexample_exact_variance(config),
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN()};
  if (config.reps < 2) return out;

  const Eigen::Matrix2cd G = counterexample_block(config);
  const double trace_t = config.m_half * (G.adjoint() * G).trace().real();
  const Family family = counterexample_family(config.example);

  // A_n = (1/n) sum_j (x_j^* x_j) - tr T with x_j = Gamma X_j; Gamma is block
  // diagonal so each block is handled on its own.
  const auto values = run_replications(config.reps, options.threads, [&](int r) {
    auto rng = make_engine(config.seed, static_cast<std::uint64_t>(r), 0);
    InnovationSampler draw(family, config.tau);
    double acc = 0.0;
    for (int j = 0; j < config.n; ++j) {
      double row = 0.0;
      for (int k = 0; k < config.m_half; ++k) {
        const cplx a = draw(rng);
        const cplx b = draw(rng);
        row += std::norm(G(0, 0) * a + G(0, 1) * b) + std::norm(G(1, 0) * a + G(1, 1) * b);
      }
      acc += row;
    }
    return acc / config.n - trace_t;
  });

  const AnalyticPair e = pairwise_mean_variance(values);
  std::vector<double> q(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) q[i] = std::pow(values[i] - e.mean, 4);
  const double m4 = pairwise_sum(q.data(), q.size()) / static_cast<double>(q.size());
  out.empirical = e.variance;
  out.empirical_se = std::sqrt(std::max(0.0, m4 - e.variance * e.variance) / config.reps);
  return out;
}

std::vector<OscillationPoint> oscillation_demo(Counterexample example,
                                               const std::vector<int>& m_half_sequence,
                                               double ratio, int reps, std::uint64_t seed,
                                               double tau, const SimulationOptions& options) {
  if (!(ratio > 0.0)) throw Error(ErrorKind::InvalidArgument, "ratio p/n must be positive");
  std::vector<OscillationPoint> out;
  out.reserve(m_half_sequence.size());
  for (std::size_t i = 0; i < m_half_sequence.size(); ++i) {
    CounterexampleConfig c;
    c.example = example;
    c.m_half = m_half_sequence[i];
    c.n = static_cast<int>(std::lround(2.0 * c.m_half / ratio));
    c.theta = i % 2 == 0 ? 0.0 : std::numbers::pi / 4.0;
    c.tau = tau;
    c.reps = reps;
    c.seed = splitmix64(seed + i);
    const CounterexampleResult r = counterexample_variance(c, options);
    out.push_back({c.m_half, c.n, c.theta, r.reference_formula, r.exact, r.empirical});
  }
  return out;
}

}  // namespace spectral_clt
