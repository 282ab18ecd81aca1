#include "somd/analysis.hpp"

#include <functional>

namespace somd {

void for_each_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  for (const auto& k : e.kids)
    if (k) for_each_expr(*k, fn);
}

void for_each_stmt(const Stmt& s, const std::function<void(const Stmt&)>& fn) {
  fn(s);
  if (s.init) for_each_stmt(*s.init, fn);
  if (s.body) for_each_stmt(*s.body, fn);
  if (s.else_body) for_each_stmt(*s.else_body, fn);
  for (const auto& c : s.stmts) for_each_stmt(*c, fn);
}

void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& fn) {
  for_each_stmt(s, [&](const Stmt& t) {
    if (t.expr) for_each_expr(*t.expr, fn);
    if (t.step) for_each_expr(*t.step, fn);
    if (t.dist)
      for (const auto& a : t.dist->user_args) for_each_expr(*a, fn);
  });
}

int lvalue_root(const Expr& e) {
  const Expr* cur = &e;
  while (cur->kind == ExprKind::Index) cur = cur->kids[0].get();
  return cur->kind == ExprKind::Var ? cur->slot : -1;
}

namespace {

bool is_var(const Expr* e, int slot) { return e && e->kind == ExprKind::Var && e->slot == slot && slot >= 0; }

bool is_int_one(const Expr& e) {
  return (e.kind == ExprKind::IntLit || e.kind == ExprKind::LongLit) && e.ival == 1;
}

int init_slot(const Stmt& loop) {
  if (!loop.init) return -1;
  if (loop.init->kind == StmtKind::VarDecl) return loop.init->slot;
  if (loop.init->kind == StmtKind::ExprStmt && loop.init->expr->kind == ExprKind::Assign &&
      loop.init->expr->op == Op::None && loop.init->expr->kids[0]->kind == ExprKind::Var)
    return loop.init->expr->kids[0]->slot;
  return -1;
}

const Expr* init_value(const Stmt& loop) {
  if (loop.init->kind == StmtKind::VarDecl) return loop.init->expr.get();
  return loop.init->expr->kids[1].get();
}

}  // namespace

std::optional<LoopForm> loop_form(const Stmt& loop) {
  if (loop.kind != StmtKind::For) return std::nullopt;
  int slot = init_slot(loop);
  if (slot < 0 || !init_value(loop)) return std::nullopt;
  if (loop.init->kind == StmtKind::VarDecl && loop.init->type != Type{BaseType::Int, 0}) return std::nullopt;
  const Expr* cond = loop.expr.get();
  if (!cond || cond->kind != ExprKind::Binary || cond->op != Op::Lt || !is_var(cond->kids[0].get(), slot))
    return std::nullopt;
  const Expr* step = loop.step.get();
  if (!step) return std::nullopt;
  bool unit = false;
  if (step->kind == ExprKind::IncDec && step->increment && is_var(step->kids[0].get(), slot)) unit = true;
  if (step->kind == ExprKind::Assign && is_var(step->kids[0].get(), slot)) {
    if (step->op == Op::Add && is_int_one(*step->kids[1])) unit = true;
    const Expr& r = *step->kids[1];
    if (step->op == Op::None && r.kind == ExprKind::Binary && r.op == Op::Add &&
        ((is_var(r.kids[0].get(), slot) && is_int_one(*r.kids[1])) ||
         (is_var(r.kids[1].get(), slot) && is_int_one(*r.kids[0]))))
      unit = true;
  }
  if (!unit) return std::nullopt;
  // The induction variable must not be assigned inside the body.
  bool assigned = false;
  for_each_expr(*loop.body, [&](const Expr& e) {
    if ((e.kind == ExprKind::Assign || e.kind == ExprKind::IncDec) && is_var(e.kids[0].get(), slot))
      assigned = true;
  });
  if (assigned) return std::nullopt;
  return LoopForm{slot, init_value(loop), cond->kids[1].get()};
}

const DistValue* MethodInfo::dist_for_slot(int slot) const {
  for (const auto& d : dists)
    if (d.slot == slot) return &d;
  return nullptr;
}

const LoopBinding* MethodInfo::binding(const Stmt* loop) const {
  auto it = parallel.find(loop);
  return it == parallel.end() ? nullptr : &it->second;
}

namespace {

/// Distributed value and dimension named by a `.length` expression.
std::optional<LoopBinding> length_target(const Expr& len, const MethodInfo& info) {
  if (len.kind != ExprKind::Length) return std::nullopt;
  const Expr& base = *len.kids[0];
  int dim = 1;
  const Expr* var = &base;
  if (base.kind == ExprKind::Index) {
    dim = 2;
    var = base.kids[0].get();
  }
  if (var->kind != ExprKind::Var) return std::nullopt;
  const DistValue* d = info.dist_for_slot(var->slot);
  if (!d || !d->spec->partitions(dim, d->type.rank)) return std::nullopt;
  return LoopBinding{d->id, dim, false};
}

std::optional<LoopBinding> find_binding(const Stmt& loop, int induction, const MethodInfo& info) {
  std::optional<LoopBinding> found;
  if (loop.expr)
    for_each_expr(*loop.expr, [&](const Expr& e) {
      if (!found) found = length_target(e, info);
    });
  if (found || induction < 0) return found;
  for_each_expr(*loop.body, [&](const Expr& e) {
    if (found || e.kind != ExprKind::Index || !is_var(e.kids[1].get(), induction)) return;
    const Expr& base = *e.kids[0];
    int dim = 1;
    const Expr* var = &base;
    if (base.kind == ExprKind::Index) {
      dim = 2;
      var = base.kids[0].get();
    }
    if (var->kind != ExprKind::Var) return;
    const DistValue* d = info.dist_for_slot(var->slot);
    if (d && d->spec->partitions(dim, d->type.rank)) found = LoopBinding{d->id, dim, false};
  });
  return found;
}

bool is_full_extent(const LoopForm& f, const LoopBinding& b, const MethodInfo& info) {
  if (f.lower->kind != ExprKind::IntLit || f.lower->ival != 0) return false;
  auto t = length_target(*f.upper, info);
  return t && t->dist_id == b.dist_id && t->dim == b.dim;
}

int source_root(const Expr& e, const std::vector<int>& root) {
  switch (e.kind) {
    case ExprKind::Var:
      return e.slot >= 0 ? root[static_cast<std::size_t>(e.slot)] : -1;
    case ExprKind::Index:
      return source_root(*e.kids[0], root);
    case ExprKind::Cond: {
      int a = source_root(*e.kids[1], root);
      return a >= 0 ? a : source_root(*e.kids[2], root);
    }
    case ExprKind::Assign:
      return source_root(*e.kids[1], root);
    default:
      return -1;
  }
}

}  // namespace

MethodInfo analyze_method(const MethodDecl& m) {
  MethodInfo info;
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    const Param& p = m.params[k];
    if (!p.dist) continue;
    DistValue d;
    d.id = static_cast<int>(info.dists.size());
    d.name = p.name;
    d.slot = p.slot;
    d.param_index = static_cast<int>(k);
    d.type = p.type;
    d.spec = &*p.dist;
    info.dists.push_back(d);
  }
  for_each_stmt(*m.body, [&](const Stmt& s) {
    if (s.kind != StmtKind::VarDecl || !s.dist) return;
    DistValue d;
    d.id = static_cast<int>(info.dists.size());
    d.name = s.name;
    d.slot = s.slot;
    d.type = s.type;
    d.spec = &*s.dist;
    d.decl = &s;
    info.dists.push_back(d);
  });

  // Alias roots: array parameters and distributed locals are roots; other array locals inherit
  // the root of whatever they were assigned from.
  auto nslots = static_cast<std::size_t>(m.num_slots);
  info.alias_root.assign(nslots, -1);
  info.reassigned.assign(nslots, false);
  for (const auto& p : m.params)
    if (p.type.is_array() && p.slot >= 0) info.alias_root[static_cast<std::size_t>(p.slot)] = p.slot;
  for (const auto& d : info.dists) info.alias_root[static_cast<std::size_t>(d.slot)] = d.slot;

  for (bool changed = true; changed;) {
    changed = false;
    auto flow = [&](int slot, const Expr& src) {
      if (slot < 0) return;
      auto& r = info.alias_root[static_cast<std::size_t>(slot)];
      if (r >= 0) return;
      int s = source_root(src, info.alias_root);
      if (s >= 0) {
        r = s;
        changed = true;
      }
    };
    for_each_stmt(*m.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl && s.type.is_array() && s.expr) flow(s.slot, *s.expr);
    });
    for_each_expr(*m.body, [&](const Expr& e) {
      if (e.kind == ExprKind::Assign && e.op == Op::None && e.kids[0]->kind == ExprKind::Var &&
          e.kids[0]->type.is_array())
        flow(e.kids[0]->slot, *e.kids[1]);
    });
  }

  for_each_expr(*m.body, [&](const Expr& e) {
    if (e.kind != ExprKind::Assign && e.kind != ExprKind::IncDec) return;
    const Expr& target = *e.kids[0];
    if (target.kind == ExprKind::Var) {
      if (target.slot >= 0) info.reassigned[static_cast<std::size_t>(target.slot)] = true;
      return;
    }
    int slot = lvalue_root(target);
    if (slot < 0) return;
    int root = info.alias_root[static_cast<std::size_t>(slot)];
    for (auto& d : info.dists)
      if (d.slot == root) d.written = true;
  });

  for_each_stmt(*m.body, [&](const Stmt& s) {
    if (s.kind != StmtKind::For) return;
    auto form = loop_form(s);
    auto b = find_binding(s, form ? form->slot : init_slot(s), info);
    if (!b) return;
    if (!form) {
      info.loops_needing_form.push_back(&s);
      return;
    }
    b->full_extent = is_full_extent(*form, *b, info);
    info.parallel[&s] = *b;
  });
  return info;
}

bool master_computable(const Expr& e, const MethodDecl& m, const MethodInfo& info) {
  auto is_param = [&](int slot) {
    for (const auto& p : m.params)
      if (p.slot == slot) return true;
    return false;
  };
  auto array_root_ok = [&](const Expr& v) {
    if (v.kind != ExprKind::Var) return false;
    if (v.slot < 0) return true;
    return is_param(v.slot) || info.dist_for_slot(v.slot) != nullptr;
  };
  switch (e.kind) {
    case ExprKind::IntLit:
    case ExprKind::LongLit:
    case ExprKind::DoubleLit:
    case ExprKind::BoolLit:
      return true;
    case ExprKind::Var:
      return e.slot < 0 || is_param(e.slot);
    case ExprKind::Length: {
      const Expr& b = *e.kids[0];
      if (b.kind == ExprKind::Index)
        return array_root_ok(*b.kids[0]) && master_computable(*b.kids[1], m, info);
      return array_root_ok(b);
    }
    case ExprKind::Index:
      return e.kids[0]->kind == ExprKind::Var && (e.kids[0]->slot < 0 || is_param(e.kids[0]->slot)) &&
             master_computable(*e.kids[1], m, info);
    case ExprKind::Unary:
    case ExprKind::Binary:
    case ExprKind::Cast:
    case ExprKind::Cond:
    case ExprKind::Math:
      for (const auto& k : e.kids)
        if (!master_computable(*k, m, info)) return false;
      return true;
    default:
      return false;
  }
}

}  // namespace somd
