#pragma once

#include <stdexcept>
#include <string>

namespace prunekit {

enum class ErrorKind {
  InvalidRepresentation,
  InsufficientSamples,
  DegenerateRepresentation,
  ShapeMismatch,
  NumericalFailure,
  InvalidParameter,
  DuplicateLayer,
  InconsistentTables,
  NoEligibleLayers,
  SpecError,
  TrainingDiverged,
  InvalidProbes,
  IneligibleLayer,
  CorruptCheckpoint,
  OracleUndefined,
  UnsupportedLayer,
  NegativeReduction,
  UnknownCorruption,
  AttackFailed,
  ReportMismatch,
  ReportError,
  IoError,
  ConfigError,
};

const char* to_string(ErrorKind k);

/// Exception carrying a machine-checkable error kind alongside the message.
class PruneError : public std::runtime_error {
 public:
  PruneError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw PruneError(kind, msg);
}

}  // namespace prunekit
