#pragma once

// Population generators, table reproduction experiments and the variance
// counterexamples for non-diagonal Gamma^* Gamma.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spectral_clt/clt_functionals.hpp"
#include "spectral_clt/hypothesis_tests.hpp"

namespace spectral_clt {

/// Innovation families. All have E X = 0 and E|X|^2 = 1.
///   MixtureA1: w.p. tau sqrt(3)/2 Y + i/2 Z, else sqrt(3)/2 W + i/2 V
///   MixtureA2: w.p. tau (Y + iZ)/sqrt(2), else (W + iV)/sqrt(2)
///   ScaledT5:  sqrt(3/5) t_5
/// with Y, Z standard normal and W, V Rademacher.
enum class Family { RealGaussian, ComplexGaussian, MixtureA1, MixtureA2, ScaledT5 };

std::string_view to_string(Family f) noexcept;
bool is_complex(Family f) noexcept;

struct InnovationMoments {
  cplx second;         ///< E X^2
  double fourth;       ///< E|X|^4
  MomentParams params; ///< kappa, alpha = |E X^2|^2, beta
};

InnovationMoments family_moments(Family f, double tau = 0.875);

struct PopulationSpec {
  Family family = Family::RealGaussian;
  Eigen::Index p = 1;
  /// p x p loading Gamma; empty means identity.
  Eigen::MatrixXcd loading;
  /// Length-p mean; empty means zero.
  Eigen::VectorXcd mean;
  double tau = 0.875;

  void validate() const;
};

/// Engine for replication `rep` and stream `stream` under a master seed. The
/// key is mixed with splitmix64 so neighbouring indices give unrelated states.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream);

/// One innovation draw.
cplx draw_innovation(Family f, double tau, std::mt19937_64& rng);

/// n rows mu + Gamma X_j for real families and real loadings. Throws
/// InvalidArgument when the spec is complex.
Eigen::MatrixXd sample_population(const PopulationSpec& spec, Eigen::Index n, std::uint64_t seed,
                                  std::uint64_t stream = 0);

Eigen::MatrixXcd sample_population_complex(const PopulationSpec& spec, Eigen::Index n,
                                           std::uint64_t seed, std::uint64_t stream = 0);

struct AnalyticPair {
  double mean;
  double variance;
};

struct SimulationSummary {
  Eigen::Index p = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  double empirical_mean = 0;
  double empirical_variance = 0;
  AnalyticPair analytic_adjusted{};
  AnalyticPair analytic_raw{};
  /// Share of replications rejected at `level` with adjusted centering.
  double rejection_rate = 0;
  double level = 0.05;
};

struct SimulationOptions {
  double level = 0.05;
  /// 0 picks the hardware concurrency, capped by SPECTRAL_CLT_THREADS.
  unsigned threads = 0;
};

/// Worker count: the request (or hardware concurrency) capped by
/// SPECTRAL_CLT_THREADS.
unsigned worker_count(unsigned requested);

/// Replications of L* for a real population with identity loading.
SimulationSummary simulate_identity_table(Eigen::Index p, Eigen::Index n, int reps,
                                          const PopulationSpec& spec, std::uint64_t seed,
                                          const SimulationOptions& options = {});

/// Replications of the two-sample statistic with weights (n-1, m-1).
SimulationSummary simulate_equality_table(Eigen::Index p, Eigen::Index n, Eigen::Index m, int reps,
                                          const PopulationSpec& spec_x,
                                          const PopulationSpec& spec_y, std::uint64_t seed,
                                          const SimulationOptions& options = {});

/// The (p, n) grids of the two tables.
std::vector<std::pair<int, int>> table1_grid();
std::vector<std::pair<int, int>> table2_grid();

enum class Counterexample { A1, A2, A3 };

std::string_view to_string(Counterexample e) noexcept;
Counterexample counterexample_from_string(std::string_view s);

struct CounterexampleConfig {
  Counterexample example = Counterexample::A3;
  /// p = 2 m_half.
  int m_half = 50;
  int n = 200;
  /// theta_{2m} for A1, theta_m for A2 and A3.
  double theta = 0.0;
  /// theta_{1m}, A1 only.
  double theta1 = 0.0;
  double tau = 0.875;
  int reps = 5000;
  std::uint64_t seed = 1;
};

struct CounterexampleResult {
  /// The displayed closed form of the example.
  double reference_formula;
  /// [beta sum |t_ii|^2 + tr(T T^*) + |E X^2|^2 tr(T T^T)] / n for
  /// T = Gamma^* Gamma, the exact variance of tr S0 - tr T.
  double exact;
  /// Sample variance over the replications (NaN when reps < 2).
  double empirical;
  /// Standard error of `empirical` under the sample fourth moment.
  double empirical_se;
};

/// The 2 x 2 diagonal block of Gamma = L^{1/2} U, L = diag(1, 2), for the
/// given example. Gamma is block diagonal with m_half copies.
Eigen::Matrix2cd counterexample_block(const CounterexampleConfig& config);

/// Innovation family used by each example.
Family counterexample_family(Counterexample e) noexcept;

/// Closed form displayed with each example, as a function of m, n and the
/// angles.
double counterexample_reference_formula(const CounterexampleConfig& config);

/// Exact variance of A_n(x) = tr S0 - tr T.
double counterexample_exact_variance(const CounterexampleConfig& config);

CounterexampleResult counterexample_variance(const CounterexampleConfig& config,
                                             const SimulationOptions& options = {});

struct OscillationPoint {
  int m_half;
  int n;
  double theta;
  double reference_formula;
  double exact;
  double empirical;
};

/// Variance sequence along m_half values with theta alternating 0, pi/4 and
/// n = round(2 m_half / ratio). reps = 0 skips the simulation.
std::vector<OscillationPoint> oscillation_demo(Counterexample example,
                                               const std::vector<int>& m_half_sequence,
                                               double ratio, int reps, std::uint64_t seed,
                                               double tau = 0.875,
                                               const SimulationOptions& options = {});

/// Mean and unbiased variance from per-replication values, accumulated by a
/// pairwise reduction so the result does not depend on the thread count.
AnalyticPair pairwise_mean_variance(const std::vector<double>& values);

}  // namespace spectral_clt
