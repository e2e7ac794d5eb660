#pragma once

// Sample covariance estimators, eigenvalue extraction and linear spectral
// statistics. Data matrices hold one observation per row.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectral_clt/spectral_function.hpp"

namespace spectral_clt {

enum class CovarianceKind { Unbiased, Mle, Noncentered };

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;
  CovarianceKind kind;
  /// n - 1 for the unbiased estimator, n otherwise.
  double denominator;
  /// Number of observations used.
  Eigen::Index n;
};

enum class SpectrumSource { Symmetric, Fisher };

struct EigenSpectrum {
  /// Ascending.
  std::vector<double> values;
  SpectrumSource source = SpectrumSource::Symmetric;

  std::size_t size() const noexcept { return values.size(); }
};

struct LssValue {
  std::string function;
  double sum;
  /// sum / p
  double mean;
};

/// Throws DegenerateSample for n < 2 and DomainError for non-finite entries.
void validate_data(const Eigen::MatrixXd& X);

/// (1/(n-1)) sum (x_i - xbar)(x_i - xbar)^T
CovarianceEstimate unbiased_cov(const Eigen::MatrixXd& X);

/// (1 - 1/n) times the unbiased estimator.
CovarianceEstimate mle_cov(const Eigen::MatrixXd& X);

/// (1/n) sum (x_i - mu)(x_i - mu)^T for a known mean mu.
CovarianceEstimate noncentered_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& mu);

/// Relative asymmetry tolerated by eigenvalues_sym.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Full ascending spectrum of a symmetric matrix. Throws NotSymmetric.
EigenSpectrum eigenvalues_sym(const Eigen::MatrixXd& M);

/// Spectrum of Sx Sy^{-1} through the symmetric reduction L^{-1} Sx L^{-T}
/// where Sy = L L^T. Throws SingularDenominator when Sy is not positive
/// definite.
EigenSpectrum fisher_spectrum(const Eigen::MatrixXd& Sx, const Eigen::MatrixXd& Sy);
EigenSpectrum fisher_spectrum(const CovarianceEstimate& Sx, const CovarianceEstimate& Sy);

/// sum g(lambda_j) and its average. Throws DomainError if g is undefined at
/// some eigenvalue.
LssValue lss(const EigenSpectrum& spectrum, const SpectralFunction& g);

/// Reciprocal condition number below which log_det_spd refuses a matrix.
inline constexpr double kMinReciprocalCondition = 1e-12;

/// log |M| for a symmetric positive definite matrix via Cholesky. Throws
/// SingularDenominator if the factorization fails or the matrix is too ill
/// conditioned.
double log_det_spd(const Eigen::MatrixXd& M);

}  // namespace spectral_clt
