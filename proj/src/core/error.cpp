#include "error.hpp"

namespace cml {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Dependency: return "dependency";
    case ErrorCode::Io: return "io";
    case ErrorCode::Spec: return "spec";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Lookup: return "lookup";
    case ErrorCode::Kind: return "kind";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::IncompleteData: return "incomplete-data";
    case ErrorCode::Unimputable: return "unimputable";
    case ErrorCode::Cardinality: return "cardinality";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Assignment: return "assignment";
    case ErrorCode::Range: return "range";
    case ErrorCode::UndefinedMoments: return "undefined-moments";
    case ErrorCode::ConstantColumn: return "constant-column";
    case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::InsufficientVariance: return "insufficient-variance";
    case ErrorCode::Dimensionality: return "dimensionality";
    case ErrorCode::Domain: return "domain";
  }
  return "unknown";
}

ErrorClass error_class(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Dependency:
    case ErrorCode::Io:
    case ErrorCode::Spec:
    case ErrorCode::Range:
      return ErrorClass::Config;
    case ErrorCode::Schema:
    case ErrorCode::Parse:
    case ErrorCode::Lookup:
    case ErrorCode::Kind:
    case ErrorCode::InsufficientData:
    case ErrorCode::IncompleteData:
    case ErrorCode::Unimputable:
    case ErrorCode::Cardinality:
    case ErrorCode::Shape:
    case ErrorCode::Assignment:
      return ErrorClass::Data;
    case ErrorCode::UndefinedMoments:
    case ErrorCode::ConstantColumn:
    case ErrorCode::UndefinedCorrelation:
    case ErrorCode::InsufficientVariance:
    case ErrorCode::Dimensionality:
    case ErrorCode::Domain:
      return ErrorClass::Numeric;
  }
  return ErrorClass::Data;
}

}  // namespace cml
