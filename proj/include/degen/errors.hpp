#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace degen {

enum class ErrorKind {
  NotSymmetric,
  NotNonnegDefinite,
  KernelsDiffer,
  EquivalenceViolated,
  NotSubunit,
  InvalidConstant,
  InvalidForm,
  EmptyBall,
  InsufficientSamples,
  ShapeMismatch,
  DegenerateRadii,
  EmptyFamily,
  InvalidParams,
  BadLevel,
  SupportViolation,
  ZeroNorm,
  MissingAtilde,
  AnotInRange,
  NonpositiveK,
  ExponentBelowP,
  ExponentAboveP,
  RangeViolation,
  DivergentNorm,
  PreconditionViolated,
  SingularSystem,
  NonConvergence,
  IntegrabilityViolated,
  ConfigError,
  IoError,
};

inline const char* kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<long> cells = {})
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what),
        kind_(kind),
        cells_(std::move(cells)) {}

  ErrorKind kind() const { return kind_; }
  // Offending cell indices, when the failure is localized (e.g. SingularSystem).
  const std::vector<long>& cells() const { return cells_; }

 private:
  ErrorKind kind_;
  std::vector<long> cells_;
};

inline const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotNonnegDefinite: return "NotNonnegDefinite";
    case ErrorKind::KernelsDiffer: return "KernelsDiffer";
    case ErrorKind::EquivalenceViolated: return "EquivalenceViolated";
    case ErrorKind::NotSubunit: return "NotSubunit";
    case ErrorKind::InvalidConstant: return "InvalidConstant";
    case ErrorKind::InvalidForm: return "InvalidForm";
    case ErrorKind::EmptyBall: return "EmptyBall";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateRadii: return "DegenerateRadii";
    case ErrorKind::EmptyFamily: return "EmptyFamily";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::BadLevel: return "BadLevel";
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::MissingAtilde: return "MissingAtilde";
    case ErrorKind::AnotInRange: return "AnotInRange";
    case ErrorKind::NonpositiveK: return "NonpositiveK";
    case ErrorKind::ExponentBelowP: return "ExponentBelowP";
    case ErrorKind::ExponentAboveP: return "ExponentAboveP";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::DivergentNorm: return "DivergentNorm";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::IntegrabilityViolated: return "IntegrabilityViolated";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace degen
