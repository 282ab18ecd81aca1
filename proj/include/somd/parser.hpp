#pragma once

#include <string_view>

#include "somd/ast.hpp"

namespace somd {

/// Parses SOMD-mini source into an AST with source locations.
/// Throws CompileError (SYNTAX_ERROR or UNKNOWN_QUALIFIER) on failure.
Program parse(std::string_view source);

}  // namespace somd
