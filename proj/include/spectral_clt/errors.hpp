#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectral_clt {

enum class ErrorKind {
  NonConvergence,
  DomainError,
  QuadratureNotConverged,
  KernelSingularity,
  DegenerateKernel,
  DegenerateSample,
  ShapeMismatch,
  NotSymmetric,
  SingularDenominator,
  InvalidArgument,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the CLI, the Python layer) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spectral_clt
