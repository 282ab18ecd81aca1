#pragma once

#include <string_view>
#include <vector>

#include "somd/ast.hpp"
#include "somd/diagnostics.hpp"
#include "somd/partition.hpp"

namespace somd {

/// Resolves names to slots, types every expression, ranks loops and checks the SOMD
/// restrictions. Annotates `p` in place and returns all diagnostics (errors and warnings).
std::vector<Diagnostic> validate(Program& p,
                                 const StrategyRegistry& registry = StrategyRegistry::defaults());

/// parse + validate. Throws CompileError when any error is reported; warnings go to `warnings`.
Program compile(std::string_view source, std::vector<Diagnostic>* warnings = nullptr,
                const StrategyRegistry& registry = StrategyRegistry::defaults());

/// True when the method carries a dist value or a reduce qualifier.
bool is_somd_method(const MethodDecl& m);

/// Identity element of a primitive reduction operator, if it has one.
bool reduce_identity(Op op, double& identity);

}  // namespace somd
