#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "somd/ast.hpp"

namespace somd {

/// A distributed parameter or local of one method. Ids are dense: params first, then locals
/// in source order.
struct DistValue {
  int id = -1;
  std::string name;
  int slot = -1;
  int param_index = -1;  // -1 for locals
  Type type;
  const DistSpec* spec = nullptr;
  const Stmt* decl = nullptr;  // locals only
  bool written = false;
};

/// A for loop whose iterations are split across method instances.
struct LoopBinding {
  int dist_id = -1;
  int dim = 1;               // 1-based dimension of the distributed value
  bool full_extent = false;  // iterates exactly [0, length) of that dimension
};

/// Canonical `for (i = lo; i < hi; i++)` shape.
struct LoopForm {
  int slot = -1;
  const Expr* lower = nullptr;
  const Expr* upper = nullptr;
};

std::optional<LoopForm> loop_form(const Stmt& loop);

struct MethodInfo {
  std::vector<DistValue> dists;
  std::map<const Stmt*, LoopBinding> parallel;
  std::vector<const Stmt*> loops_needing_form;  // touch a distributed dimension but are not canonical
  std::vector<int> alias_root;   // per slot: param/dist-local slot it may alias, or -1
  std::vector<bool> reassigned;  // per slot: target of a whole-variable assignment

  const DistValue* dist_for_slot(int slot) const;
  const LoopBinding* binding(const Stmt* loop) const;
};

/// Requires a slot-resolved method. Pure function of the method.
MethodInfo analyze_method(const MethodDecl& m);

/// True when `e` can be evaluated by the master before any instance starts: literals, globals,
/// parameters, array lengths and arithmetic over them.
bool master_computable(const Expr& e, const MethodDecl& m, const MethodInfo& info);

/// Root variable slot of an lvalue (`a`, `a[i]`, `a[i][j]`), or -1.
int lvalue_root(const Expr& e);

/// Calls `fn` on every expression node under `s` (pre-order), descending into statements.
void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& fn);
void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& fn);
void for_each_stmt(const Stmt& s, const std::function<void(const Stmt&)>& fn);

}  // namespace somd
