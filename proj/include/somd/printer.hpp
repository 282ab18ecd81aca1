#pragma once

#include <functional>
#include <string>

#include "somd/ast.hpp"

namespace somd {

/// Names for lowered nodes that only carry numeric ids.
struct PrintNames {
  std::function<std::string(int dist_id, int dim)> range;  // e.g. "G_1"
  std::function<std::string(int aux_id)> aux;
  std::function<std::string(int kernel_id)> kernel;
};

std::string print_expr(const Expr& e, const PrintNames& names = {});

/// Prints a statement at `indent` levels (two spaces each), newline-terminated.
std::string print_stmt(const Stmt& s, int indent = 0, const PrintNames& names = {});

std::string print_dist(const DistSpec& d);
std::string print_method(const MethodDecl& m, const PrintNames& names = {});

/// Source form that reparses to a structurally identical AST.
std::string print_program(const Program& p);

/// Location-free canonical dump; equal dumps mean structurally identical trees.
std::string dump_structure(const Program& p);

}  // namespace somd
