#pragma once

#include <stdexcept>
#include <string>

namespace cml {

enum class ErrorCode {
  Config,
  Dependency,
  Io,
  Spec,
  Schema,
  Parse,
  Lookup,
  Kind,
  InsufficientData,
  IncompleteData,
  Unimputable,
  Cardinality,
  Shape,
  Assignment,
  Range,
  UndefinedMoments,
  ConstantColumn,
  UndefinedCorrelation,
  InsufficientVariance,
  Dimensionality,
  Domain,
};

// Coarse grouping used for process exit codes: 2 config, 3 data, 4 numeric.
enum class ErrorClass { Config = 2, Data = 3, Numeric = 4 };

const char* error_code_name(ErrorCode code) noexcept;
ErrorClass error_class(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cml
