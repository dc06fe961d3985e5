#pragma once

#include <stdexcept>
#include <string>

namespace nsreg {

enum class ErrorKind {
  BallTooLarge,
  DomainExceeded,
  ShellUnresolved,
  SeamMismatch,
  NonIntegrableProfile,
  SingularPoint,
  SingularQuadrature,
  AdmissibilityViolation,
  NegativeTime,
  MeshTooCoarse,
  NoContraction,
  GateViolation,
  ExponentOrder,
  CflViolation,
  NanGuard,
  SupportViolation,
  UnresolvedCylinder,
  CoverageGap,
  CompatibilityViolation,
  ConfigError,
  InvalidArgument,
  IoError
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::BallTooLarge: return "BallTooLarge";
    case ErrorKind::DomainExceeded: return "DomainExceeded";
    case ErrorKind::ShellUnresolved: return "ShellUnresolved";
    case ErrorKind::SeamMismatch: return "SeamMismatch";
    case ErrorKind::NonIntegrableProfile: return "NonIntegrableProfile";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::SingularQuadrature: return "SingularQuadrature";
    case ErrorKind::AdmissibilityViolation: return "AdmissibilityViolation";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::GateViolation: return "GateViolation";
    case ErrorKind::ExponentOrder: return "ExponentOrder";
    case ErrorKind::CflViolation: return "CflViolation";
    case ErrorKind::NanGuard: return "NanGuard";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::UnresolvedCylinder: return "UnresolvedCylinder";
    case ErrorKind::CoverageGap: return "CoverageGap";
    case ErrorKind::CompatibilityViolation: return "CompatibilityViolation";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace nsreg
