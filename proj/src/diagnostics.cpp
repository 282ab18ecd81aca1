#include "somd/diagnostics.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace somd {

const char* code_name(DiagCode code) {
  switch (code) {
    case DiagCode::SyntaxError: return "SYNTAX_ERROR";
    case DiagCode::UnknownQualifier: return "UNKNOWN_QUALIFIER";
    case DiagCode::DuplicateMethod: return "DUPLICATE_METHOD";
    case DiagCode::DuplicateVariable: return "DUPLICATE_VARIABLE";
    case DiagCode::UndeclaredIdentifier: return "UNDECLARED_IDENTIFIER";
    case DiagCode::UnknownMethod: return "UNKNOWN_METHOD";
    case DiagCode::ArityMismatch: return "ARITY_MISMATCH";
    case DiagCode::TypeError: return "TYPE_ERROR";
    case DiagCode::InputOnlyViolation: return "INPUT_ONLY_VIOLATION";
    case DiagCode::LoopBoundLocal: return "LOOP_BOUND_LOCAL";
    case DiagCode::ParallelLoopForm: return "PARALLEL_LOOP_FORM";
    case DiagCode::ConditionalNestedReduction: return "CONDITIONAL_NESTED_REDUCTION";
    case DiagCode::DivergentNestedReduction: return "DIVERGENT_NESTED_REDUCTION";
    case DiagCode::DivergentSync: return "DIVERGENT_SYNC";
    case DiagCode::NestedArrayReductionUnsupported: return "NESTED_ARRAY_REDUCTION_UNSUPPORTED";
    case DiagCode::NestedReductionWithoutDist: return "NESTED_REDUCTION_WITHOUT_DIST";
    case DiagCode::MissingReduction: return "MISSING_REDUCTION";
    case DiagCode::ReduceTypeMismatch: return "REDUCE_TYPE_MISMATCH";
    case DiagCode::UnknownStrategy: return "UNKNOWN_STRATEGY";
    case DiagCode::InvalidDistSpec: return "INVALID_DIST_SPEC";
    case DiagCode::DistLocalInit: return "DIST_LOCAL_INIT";
    case DiagCode::SharedInvalid: return "SHARED_INVALID";
    case DiagCode::SyncTargetInvalid: return "SYNC_TARGET_INVALID";
    case DiagCode::SharedNonIdentityInit: return "SHARED_NON_IDENTITY_INIT";
    case DiagCode::GpuStrategyIgnored: return "GPU_STRATEGY_IGNORED";
    case DiagCode::GpuUnsupported: return "GPU_UNSUPPORTED";
    case DiagCode::PlanError: return "PLAN_ERROR";
    case DiagCode::ConfigError: return "CONFIG_ERROR";
  }
  return "UNKNOWN";
}

std::string Diagnostic::format() const {
  std::ostringstream os;
  os << loc.line << ':' << loc.col << ": "
     << (severity == Severity::Error ? "error " : "warning ") << code_name(code)
     << ": " << message;
  return os.str();
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string diagnostics_to_json(const std::vector<Diagnostic>& diags) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : diags) {
    out.push_back({{"line", d.loc.line},
                   {"column", d.loc.col},
                   {"severity", d.severity == Severity::Error ? "error" : "warning"},
                   {"code", code_name(d.code)},
                   {"message", d.message}});
  }
  return out.dump(2);
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
  std::string s;
  for (const auto& d : diags) {
    if (!s.empty()) s += '\n';
    s += d.format();
  }
  return s;
}

std::string located(SourceLoc loc, const std::string& what) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + what;
}

}  // namespace

CompileError::CompileError(std::vector<Diagnostic> diags)
    : std::runtime_error(summarize(diags)), diags_(std::move(diags)) {}

RuntimeError::RuntimeError(SourceLoc loc, const std::string& what)
    : std::runtime_error(located(loc, what)), loc_(loc) {}

}  // namespace somd
