#include "spectral_clt/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectral_clt/errors.hpp"

namespace spectral_clt {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

void validate_data(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) {
    throw Error(ErrorKind::DegenerateSample,
                "need at least 2 observations, got " + std::to_string(X.rows()));
  }
  if (X.cols() < 1) throw Error(ErrorKind::DegenerateSample, "data has no variables");
  if (!X.allFinite()) throw Error(ErrorKind::DomainError, "data contains non-finite entries");
}

CovarianceEstimate unbiased_cov(const Eigen::MatrixXd& X) {
  validate_data(X);
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(C.transpose(), 1.0 / static_cast<double>(n - 1));
  S = S.selfadjointView<Eigen::Lower>();
  return {std::move(S), CovarianceKind::Unbiased, static_cast<double>(n - 1), n};
}

CovarianceEstimate mle_cov(const Eigen::MatrixXd& X) {
  CovarianceEstimate S = unbiased_cov(X);
  const double n = static_cast<double>(S.n);
  S.matrix *= (1.0 - 1.0 / n);
  S.kind = CovarianceKind::Mle;
  S.denominator = n;
  return S;
}

CovarianceEstimate noncentered_cov(const Eigen::MatrixXd& X, const Eigen::VectorXd& mu) {
  if (mu.size() != X.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "mean has length " + std::to_string(mu.size()) +
                                              " but data has " + std::to_string(X.cols()) +
                                              " columns");
  }
  if (X.rows() < 1) throw Error(ErrorKind::DegenerateSample, "data has no observations");
  if (!X.allFinite() || !mu.allFinite()) {
    throw Error(ErrorKind::DomainError, "data contains non-finite entries");
  }
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd C = X.rowwise() - mu.transpose();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(C.transpose(), 1.0 / static_cast<double>(n));
  S = S.selfadjointView<Eigen::Lower>();
  return {std::move(S), CovarianceKind::Noncentered, static_cast<double>(n), n};
}

EigenSpectrum eigenvalues_sym(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw Error(ErrorKind::ShapeMismatch, "matrix is not square");
  if (!M.allFinite()) throw Error(ErrorKind::DomainError, "matrix has non-finite entries");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw Error(ErrorKind::NotSymmetric, "matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(M), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NonConvergence, "symmetric eigensolver failed");
  }
  const auto& ev = es.eigenvalues();
  EigenSpectrum out{{ev.data(), ev.data() + ev.size()}, SpectrumSource::Symmetric};
  std::sort(out.values.begin(), out.values.end());
  return out;
}

EigenSpectrum fisher_spectrum(const Eigen::MatrixXd& Sx, const Eigen::MatrixXd& Sy) {
  if (Sx.rows() != Sx.cols() || Sy.rows() != Sy.cols() || Sx.rows() != Sy.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "Fisher matrix needs two p x p matrices");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(Sy));
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinReciprocalCondition)) {
    throw Error(ErrorKind::SingularDenominator,
                "denominator covariance is not positive definite (p >= m or degenerate sample)");
  }
  // L^{-1} Sx L^{-T}
  Eigen::MatrixXd A = llt.matrixL().solve(symmetrize(Sx));
  A = llt.matrixL().solve(A.transpose()).eval();
  EigenSpectrum s = eigenvalues_sym(symmetrize(A));
  for (auto& v : s.values) v = std::max(v, 0.0);
  s.source = SpectrumSource::Fisher;
  return s;
}

EigenSpectrum fisher_spectrum(const CovarianceEstimate& Sx, const CovarianceEstimate& Sy) {
  return fisher_spectrum(Sx.matrix, Sy.matrix);
}

LssValue lss(const EigenSpectrum& spectrum, const SpectralFunction& g) {
  if (spectrum.values.empty()) throw Error(ErrorKind::InvalidArgument, "empty spectrum");
  double s = 0.0;
  for (double v : spectrum.values) s += g.real(v);
  return {g.name(), s, s / static_cast<double>(spectrum.values.size())};
}

double log_det_spd(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw Error(ErrorKind::ShapeMismatch, "matrix is not square");
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(M));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularDenominator, "matrix is not positive definite");
  }
  if (!(llt.rcond() >= kMinReciprocalCondition)) {
    throw Error(ErrorKind::SingularDenominator, "matrix condition number exceeds 1e12");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace spectral_clt
