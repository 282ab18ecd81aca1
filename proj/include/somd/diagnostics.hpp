#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "somd/ast.hpp"

namespace somd {

enum class DiagCode {
  SyntaxError,
  UnknownQualifier,
  DuplicateMethod,
  DuplicateVariable,
  UndeclaredIdentifier,
  UnknownMethod,
  ArityMismatch,
  TypeError,
  InputOnlyViolation,
  LoopBoundLocal,
  ParallelLoopForm,
  ConditionalNestedReduction,
  DivergentNestedReduction,
  DivergentSync,
  NestedArrayReductionUnsupported,
  NestedReductionWithoutDist,
  MissingReduction,
  ReduceTypeMismatch,
  UnknownStrategy,
  InvalidDistSpec,
  DistLocalInit,
  SharedInvalid,
  SyncTargetInvalid,
  SharedNonIdentityInit,  // warning
  GpuStrategyIgnored,     // warning
  GpuUnsupported,
  PlanError,
  ConfigError,
};

enum class Severity { Error, Warning };

const char* code_name(DiagCode code);

struct Diagnostic {
  DiagCode code;
  Severity severity = Severity::Error;
  SourceLoc loc;
  std::string message;

  /// `line:col: error CODE: message`
  std::string format() const;
};

bool has_errors(const std::vector<Diagnostic>& diags);

/// Machine-readable rendering used by `--diag-json`.
std::string diagnostics_to_json(const std::vector<Diagnostic>& diags);

class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

/// Failure while executing SOMD-mini code (bounds, division by zero, ...).
class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(SourceLoc loc, const std::string& what);
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

}  // namespace somd
