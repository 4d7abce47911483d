#include "prunekit/errors.hpp"

namespace prunekit {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidRepresentation: return "InvalidRepresentation";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::DegenerateRepresentation: return "DegenerateRepresentation";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DuplicateLayer: return "DuplicateLayer";
    case ErrorKind::InconsistentTables: return "InconsistentTables";
    case ErrorKind::NoEligibleLayers: return "NoEligibleLayers";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::InvalidProbes: return "InvalidProbes";
    case ErrorKind::IneligibleLayer: return "IneligibleLayer";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::OracleUndefined: return "OracleUndefined";
    case ErrorKind::UnsupportedLayer: return "UnsupportedLayer";
    case ErrorKind::NegativeReduction: return "NegativeReduction";
    case ErrorKind::UnknownCorruption: return "UnknownCorruption";
    case ErrorKind::AttackFailed: return "AttackFailed";
    case ErrorKind::ReportMismatch: return "ReportMismatch";
    case ErrorKind::ReportError: return "ReportError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace prunekit
