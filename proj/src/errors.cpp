#include "spectral_clt/errors.hpp"

namespace spectral_clt {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::KernelSingularity: return "KernelSingularity";
    case ErrorKind::DegenerateKernel: return "DegenerateKernel";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace spectral_clt
