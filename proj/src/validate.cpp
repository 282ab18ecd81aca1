#include "somd/validate.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "somd/analysis.hpp"
#include "somd/parser.hpp"

namespace somd {

namespace {

const Type kBad{BaseType::Void, 0};
const Type kInt{BaseType::Int, 0};
const Type kBool{BaseType::Bool, 0};

bool integral(const Type& t) { return t.rank == 0 && (t.base == BaseType::Int || t.base == BaseType::Long); }

Type promote(const Type& a, const Type& b) {
  if (a.base == BaseType::Double || b.base == BaseType::Double) return {BaseType::Double, 0};
  if (a.base == BaseType::Long || b.base == BaseType::Long) return {BaseType::Long, 0};
  return kInt;
}

bool assignable(const Type& to, const Type& from) {
  if (to.rank > 0 || from.rank > 0) return to == from;
  if (to.is_numeric() && from.is_numeric()) return true;
  return to.base == BaseType::Bool && from.base == BaseType::Bool;
}

struct MathSig {
  const char* name;
  int arity;
  bool keeps_type;
};

constexpr MathSig kMath[] = {
    {"sqrt", 1, false}, {"abs", 1, true},  {"max", 2, true},   {"min", 2, true},
    {"pow", 2, false},  {"exp", 1, false}, {"log", 1, false},  {"sin", 1, false},
    {"cos", 1, false},  {"tan", 1, false}, {"atan", 1, false}, {"atan2", 2, false},
    {"floor", 1, false}, {"ceil", 1, false},
};

const MathSig* find_math(const std::string& n) {
  for (const auto& m : kMath)
    if (n == m.name) return &m;
  return nullptr;
}

class Checker {
 public:
  Checker(Program& p, const StrategyRegistry& reg, std::vector<Diagnostic>& d)
      : p_(p), reg_(reg), diags_(d) {}

  void run() {
    check_globals();
    std::set<std::string> names;
    for (auto& m : p_.methods) {
      if (!names.insert(m.name).second)
        err(DiagCode::DuplicateMethod, m.loc, "method '" + m.name + "' is already declared");
    }
    for (auto& m : p_.methods) resolve(m);
    if (has_errors(diags_)) return;
    for (auto& m : p_.methods) m.is_somd = is_somd_method(m);
    for (auto& m : p_.methods) somd_checks(m);
  }

 private:
  Program& p_;
  const StrategyRegistry& reg_;
  std::vector<Diagnostic>& diags_;
  MethodDecl* m_ = nullptr;
  std::vector<std::map<std::string, int>> scopes_;
  std::map<std::string, int> global_names_;
  int next_rank_ = 0;

  void err(DiagCode c, SourceLoc loc, std::string msg) {
    diags_.push_back({c, Severity::Error, loc, std::move(msg)});
  }
  void warn(DiagCode c, SourceLoc loc, std::string msg) {
    diags_.push_back({c, Severity::Warning, loc, std::move(msg)});
  }

  // ---- name and type resolution ----------------------------------------------------------

  void check_globals() {
    for (std::size_t k = 0; k < p_.globals.size(); ++k) {
      auto& g = p_.globals[k];
      if (!g.type.is_scalar()) err(DiagCode::TypeError, g.loc, "constant '" + g.name + "' must be a scalar");
      Type t = expr(*g.init);
      if (t != kBad && !assignable(g.type, t))
        err(DiagCode::TypeError, g.init->loc, "cannot initialize " + to_string(g.type) + " constant with " + to_string(t));
      if (!global_names_.emplace(g.name, static_cast<int>(k)).second)
        err(DiagCode::DuplicateVariable, g.loc, "constant '" + g.name + "' is already declared");
    }
  }

  int declare(const std::string& name, const Type& t, SourceLoc loc) {
    for (const auto& s : scopes_)
      if (s.count(name)) {
        err(DiagCode::DuplicateVariable, loc, "variable '" + name + "' is already declared");
        break;
      }
    int slot = m_->num_slots++;
    m_->slot_types.push_back(t);
    m_->slot_names.push_back(name);
    scopes_.back()[name] = slot;
    return slot;
  }

  int lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return -1;
  }

  void resolve(MethodDecl& m) {
    m_ = &m;
    m.num_slots = 0;
    m.slot_types.clear();
    m.slot_names.clear();
    next_rank_ = 0;
    scopes_.assign(1, {});
    for (auto& prm : m.params) {
      if (prm.type.base == BaseType::Void) err(DiagCode::TypeError, prm.loc, "parameter '" + prm.name + "' cannot be void");
      prm.slot = declare(prm.name, prm.type, prm.loc);
    }
    if (m.reduce)
      for (auto& a : m.reduce->user_args) expr(*a);
    for (auto& prm : m.params)
      if (prm.dist)
        for (auto& a : prm.dist->user_args) expr(*a);
    scopes_.emplace_back();
    for (auto& s : m.body->stmts) stmt(*s);
    scopes_.clear();
    m_ = nullptr;
  }

  void cond_expr(Expr& e) {
    Type t = expr(e);
    if (t != kBad && t != kBool) err(DiagCode::TypeError, e.loc, "condition must be boolean, found " + to_string(t));
  }

  void stmt(Stmt& s) {
    switch (s.kind) {
      case StmtKind::VarDecl: {
        if (s.type.base == BaseType::Void) err(DiagCode::TypeError, s.loc, "variable '" + s.name + "' cannot be void");
        if (s.dist)
          for (auto& a : s.dist->user_args) expr(*a);
        if (s.expr) {
          Type t = expr(*s.expr);
          if (t != kBad && !assignable(s.type, t))
            err(DiagCode::TypeError, s.expr->loc, "cannot initialize " + to_string(s.type) + " '" + s.name + "' with " + to_string(t));
        }
        s.slot = declare(s.name, s.type, s.loc);
        return;
      }
      case StmtKind::ExprStmt:
        expr(*s.expr);
        return;
      case StmtKind::Empty:
        return;
      case StmtKind::Block:
        scopes_.emplace_back();
        for (auto& c : s.stmts) stmt(*c);
        scopes_.pop_back();
        return;
      case StmtKind::If:
        cond_expr(*s.expr);
        scoped(*s.body);
        if (s.else_body) scoped(*s.else_body);
        return;
      case StmtKind::While:
        cond_expr(*s.expr);
        scoped(*s.body);
        return;
      case StmtKind::For: {
        s.loop_rank = next_rank_++;
        scopes_.emplace_back();
        if (s.init) stmt(*s.init);
        if (s.expr) cond_expr(*s.expr);
        if (s.step) expr(*s.step);
        scoped(*s.body);
        scopes_.pop_back();
        if (auto f = loop_form(s)) {
          s.induction_slot = f->slot;
          s.induction = m_->slot_names[static_cast<std::size_t>(f->slot)];
        } else if (s.init && s.init->kind == StmtKind::VarDecl) {
          s.induction_slot = s.init->slot;
          s.induction = s.init->name;
        }
        return;
      }
      case StmtKind::Return: {
        s.type = m_->return_type;
        if (!s.expr) {
          if (m_->return_type.base != BaseType::Void)
            err(DiagCode::TypeError, s.loc, "missing return value in '" + m_->name + "'");
          return;
        }
        Type t = expr(*s.expr);
        if (m_->return_type.base == BaseType::Void)
          err(DiagCode::TypeError, s.loc, "void method '" + m_->name + "' returns a value");
        else if (t != kBad && !assignable(m_->return_type, t))
          err(DiagCode::TypeError, s.expr->loc, "cannot return " + to_string(t) + " from " + to_string(m_->return_type) + " method");
        return;
      }
      case StmtKind::Sync:
        if (!s.target.empty()) {
          s.target_slot = lookup(s.target);
          if (s.target_slot < 0) err(DiagCode::UndeclaredIdentifier, s.loc, "undeclared sync target '" + s.target + "'");
        }
        if (s.reduce)
          for (auto& a : s.reduce->user_args) expr(*a);
        scoped(*s.body);
        return;
      default:
        return;
    }
  }

  void scoped(Stmt& s) {
    scopes_.emplace_back();
    stmt(s);
    scopes_.pop_back();
  }

  Type expr(Expr& e) {
    e.type = expr_type(e);
    return e.type;
  }

  bool is_lvalue(const Expr& e) { return e.kind == ExprKind::Var || e.kind == ExprKind::Index; }

  Type expr_type(Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit: return kInt;
      case ExprKind::LongLit: return {BaseType::Long, 0};
      case ExprKind::DoubleLit: return {BaseType::Double, 0};
      case ExprKind::BoolLit: return kBool;
      case ExprKind::Var: {
        if (m_) {
          int slot = lookup(e.name);
          if (slot >= 0) {
            e.slot = slot;
            e.global_index = -1;
            return m_->slot_types[static_cast<std::size_t>(slot)];
          }
        }
        auto g = global_names_.find(e.name);
        if (g != global_names_.end()) {
          e.slot = -1;
          e.global_index = g->second;
          return p_.globals[static_cast<std::size_t>(g->second)].type;
        }
        err(DiagCode::UndeclaredIdentifier, e.loc, "undeclared identifier '" + e.name + "'");
        return kBad;
      }
      case ExprKind::Index: {
        Type b = expr(*e.kids[0]);
        Type i = expr(*e.kids[1]);
        if (b == kBad || i == kBad) return kBad;
        if (!b.is_array()) {
          err(DiagCode::TypeError, e.loc, "indexing a non-array value of type " + to_string(b));
          return kBad;
        }
        if (!integral(i)) {
          err(DiagCode::TypeError, e.kids[1]->loc, "array index must be an integer");
          return kBad;
        }
        return b.element();
      }
      case ExprKind::Length: {
        Type b = expr(*e.kids[0]);
        if (b == kBad) return kBad;
        if (!b.is_array()) {
          err(DiagCode::TypeError, e.loc, ".length of a non-array value");
          return kBad;
        }
        return kInt;
      }
      case ExprKind::Unary: {
        Type a = expr(*e.kids[0]);
        if (a == kBad) return kBad;
        if (e.op == Op::Not) {
          if (a != kBool) err(DiagCode::TypeError, e.loc, "'!' needs a boolean operand");
          return kBool;
        }
        if (e.op == Op::BitNot) {
          if (!integral(a)) {
            err(DiagCode::TypeError, e.loc, "'~' needs an integer operand");
            return kBad;
          }
          return promote(a, kInt);
        }
        if (!a.is_numeric()) {
          err(DiagCode::TypeError, e.loc, std::string("'") + op_symbol(e.op) + "' needs a numeric operand");
          return kBad;
        }
        return promote(a, kInt);
      }
      case ExprKind::Binary: {
        Type a = expr(*e.kids[0]);
        Type b = expr(*e.kids[1]);
        if (a == kBad || b == kBad) return kBad;
        return binary_type(e, a, b);
      }
      case ExprKind::Assign: {
        Type a = expr(*e.kids[0]);
        Type b = expr(*e.kids[1]);
        if (!is_lvalue(*e.kids[0])) {
          err(DiagCode::TypeError, e.loc, "left side of an assignment must be a variable or array element");
          return kBad;
        }
        if (e.kids[0]->kind == ExprKind::Var && e.kids[0]->global_index >= 0) {
          err(DiagCode::TypeError, e.loc, "cannot assign to constant '" + e.kids[0]->name + "'");
          return kBad;
        }
        if (a == kBad || b == kBad) return kBad;
        if (e.op == Op::None) {
          if (!assignable(a, b)) {
            err(DiagCode::TypeError, e.loc, "cannot assign " + to_string(b) + " to " + to_string(a));
            return kBad;
          }
          return a;
        }
        if (binary_type(e, a, b) == kBad) return kBad;
        return a;
      }
      case ExprKind::IncDec: {
        Type a = expr(*e.kids[0]);
        if (a == kBad) return kBad;
        if (!is_lvalue(*e.kids[0]) || (e.kids[0]->kind == ExprKind::Var && e.kids[0]->global_index >= 0)) {
          err(DiagCode::TypeError, e.loc, "operand of ++/-- must be a variable or array element");
          return kBad;
        }
        if (!a.is_numeric()) {
          err(DiagCode::TypeError, e.loc, "operand of ++/-- must be numeric");
          return kBad;
        }
        return a;
      }
      case ExprKind::Call: {
        std::vector<Type> args;
        for (auto& k : e.kids) args.push_back(expr(*k));
        int idx = p_.index_of(e.name);
        if (idx < 0) {
          err(DiagCode::UnknownMethod, e.loc, "call to undeclared method '" + e.name + "'");
          return kBad;
        }
        e.method_index = idx;
        const MethodDecl& callee = p_.methods[static_cast<std::size_t>(idx)];
        if (callee.params.size() != args.size()) {
          err(DiagCode::ArityMismatch, e.loc,
              "'" + e.name + "' expects " + std::to_string(callee.params.size()) + " arguments, got " +
                  std::to_string(args.size()));
          return kBad;
        }
        for (std::size_t k = 0; k < args.size(); ++k)
          if (args[k] != kBad && !assignable(callee.params[k].type, args[k]))
            err(DiagCode::TypeError, e.kids[k]->loc,
                "argument " + std::to_string(k + 1) + " of '" + e.name + "' expects " +
                    to_string(callee.params[k].type) + ", got " + to_string(args[k]));
        return callee.return_type;
      }
      case ExprKind::Math: {
        std::vector<Type> args;
        for (auto& k : e.kids) args.push_back(expr(*k));
        const MathSig* sig = find_math(e.name);
        if (!sig) {
          err(DiagCode::UnknownMethod, e.loc, "unknown function Math." + e.name);
          return kBad;
        }
        if (static_cast<int>(args.size()) != sig->arity) {
          err(DiagCode::ArityMismatch, e.loc, "Math." + e.name + " expects " + std::to_string(sig->arity) + " arguments");
          return kBad;
        }
        Type r = kInt;
        for (std::size_t k = 0; k < args.size(); ++k) {
          if (args[k] == kBad) return kBad;
          if (!args[k].is_numeric()) {
            err(DiagCode::TypeError, e.kids[k]->loc, "Math." + e.name + " needs numeric arguments");
            return kBad;
          }
          r = promote(r, args[k]);
        }
        return sig->keeps_type ? r : Type{BaseType::Double, 0};
      }
      case ExprKind::NewArray:
        for (auto& k : e.kids) {
          Type t = expr(*k);
          if (t != kBad && !integral(t)) err(DiagCode::TypeError, k->loc, "array size must be an integer");
        }
        return e.type;
      case ExprKind::Cast: {
        Type a = expr(*e.kids[0]);
        if (a == kBad) return kBad;
        if (!a.is_numeric() || !e.type.is_numeric()) {
          err(DiagCode::TypeError, e.loc, "cannot cast " + to_string(a) + " to " + to_string(e.type));
          return kBad;
        }
        return e.type;
      }
      case ExprKind::Cond: {
        Type c = expr(*e.kids[0]);
        Type a = expr(*e.kids[1]);
        Type b = expr(*e.kids[2]);
        if (c == kBad || a == kBad || b == kBad) return kBad;
        if (c != kBool) err(DiagCode::TypeError, e.kids[0]->loc, "condition must be boolean");
        if (a.is_numeric() && b.is_numeric()) return promote(a, b);
        if (a != b) {
          err(DiagCode::TypeError, e.loc, "conditional branches have types " + to_string(a) + " and " + to_string(b));
          return kBad;
        }
        return a;
      }
      default:
        return kBad;
    }
  }

  Type binary_type(const Expr& e, const Type& a, const Type& b) {
    auto bad = [&](const char* what) {
      err(DiagCode::TypeError, e.loc,
          std::string("operator '") + op_symbol(e.op) + "' " + what + " (operands " + to_string(a) + ", " + to_string(b) + ")");
      return kBad;
    };
    switch (e.op) {
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Mod:
        if (!a.is_numeric() || !b.is_numeric()) return bad("needs numeric operands");
        return promote(a, b);
      case Op::Shl: case Op::Shr: case Op::Ushr:
        if (!integral(a) || !integral(b)) return bad("needs integer operands");
        return promote(a, kInt);
      case Op::BitAnd: case Op::BitOr: case Op::BitXor:
        if (a == kBool && b == kBool) return kBool;
        if (!integral(a) || !integral(b)) return bad("needs integer or boolean operands");
        return promote(a, b);
      case Op::And: case Op::Or:
        if (a != kBool || b != kBool) return bad("needs boolean operands");
        return kBool;
      case Op::Eq: case Op::Ne:
        if ((a.is_numeric() && b.is_numeric()) || (a == kBool && b == kBool)) return kBool;
        return bad("cannot compare these operands");
      case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge:
        if (!a.is_numeric() || !b.is_numeric()) return bad("needs numeric operands");
        return kBool;
      default:
        return bad("is not a binary operator");
    }
  }

  // ---- SOMD restrictions -----------------------------------------------------------------

  struct Ctx {
    bool parallel = false;
    bool cond = false;
    bool nonuniform = false;
  };

  bool param_slot(const MethodDecl& m, int slot, const Param** out = nullptr) const {
    for (const auto& p : m.params)
      if (p.slot == slot) {
        if (out) *out = &p;
        return true;
      }
    return false;
  }

  void check_dist(const DistSpec& d, const Type& t, const std::string& name, const MethodDecl& m,
                  const MethodInfo& info) {
    if (!t.is_array()) {
      err(DiagCode::InvalidDistSpec, d.loc, "dist applies to arrays only ('" + name + "' is " + to_string(t) + ")");
      return;
    }
    if (!d.view.empty() && !d.polyview.empty())
      err(DiagCode::InvalidDistSpec, d.loc, "view and polyview are mutually exclusive");
    for (const auto* v : {&d.view, &d.polyview}) {
      if (static_cast<int>(v->size()) > t.rank)
        err(DiagCode::InvalidDistSpec, d.loc, "view of '" + name + "' has more entries than dimensions");
      for (const auto& pr : *v)
        if (pr.before < 0 || pr.after < 0) err(DiagCode::InvalidDistSpec, d.loc, "view counts must be non-negative");
    }
    std::set<int> seen;
    for (int dim : d.dims)
      if (dim < 1 || dim > t.rank || !seen.insert(dim).second)
        err(DiagCode::InvalidDistSpec, d.loc, "invalid dimension " + std::to_string(dim) + " for '" + name + "'");
    if (d.strategy == DistStrategy::User) {
      if (!reg_.partitioner(d.user_name))
        err(DiagCode::UnknownStrategy, d.loc, "no partitioning strategy named '" + d.user_name + "' is registered");
      else if (std::find(p_.user_strategies.begin(), p_.user_strategies.end(), d.user_name) == p_.user_strategies.end())
        p_.user_strategies.push_back(d.user_name);
      if (!d.view.empty() || !d.polyview.empty())
        err(DiagCode::InvalidDistSpec, d.loc, "views are not supported with user-defined strategies");
      for (const auto& a : d.user_args)
        if (!master_computable(*a, m, info))
          err(DiagCode::InvalidDistSpec, a->loc, "strategy arguments must be computable before the instances start");
    }
  }

  void somd_checks(MethodDecl& m) {
    MethodInfo info = analyze_method(m);
    bool somd = m.is_somd;

    for (auto& prm : m.params)
      if (prm.dist)
        if (const DistValue* d = info.dist_for_slot(prm.slot)) prm.written = d->written;

    // Input-only parameters.
    for_each_expr(*m.body, [&](const Expr& e) {
      if (e.kind != ExprKind::Assign && e.kind != ExprKind::IncDec) return;
      const Expr& t = *e.kids[0];
      const Param* prm = nullptr;
      if (t.kind == ExprKind::Var) {
        if (param_slot(m, t.slot, &prm)) {
          if (prm->dist)
            err(DiagCode::InvalidDistSpec, e.loc, "distributed parameter '" + prm->name + "' cannot be reassigned");
          else
            err(DiagCode::InputOnlyViolation, e.loc, "parameter '" + prm->name + "' is input-only and cannot be assigned");
        } else if (const DistValue* d = info.dist_for_slot(t.slot)) {
          err(DiagCode::DistLocalInit, e.loc, "distributed local '" + d->name + "' cannot be reassigned");
        }
        return;
      }
      int root = lvalue_root(t);
      if (root < 0) return;
      int alias = info.alias_root[static_cast<std::size_t>(root)];
      if (alias >= 0 && param_slot(m, alias, &prm) && !prm->dist)
        err(DiagCode::InputOnlyViolation, e.loc,
            "write into parameter '" + prm->name + "', which is input-only (only dist parameters may be written)");
    });

    for (const auto& d : info.dists) check_dist(*d.spec, d.type, d.name, m, info);

    // Distributed locals and shared scalars live at the top level of the body.
    std::set<const Stmt*> top(m.body->stmts.size() ? std::set<const Stmt*>{} : std::set<const Stmt*>{});
    for (const auto& s : m.body->stmts) top.insert(s.get());
    for_each_stmt(*m.body, [&](const Stmt& s) {
      if (s.kind != StmtKind::VarDecl) return;
      if (s.dist) {
        if (!top.count(&s)) err(DiagCode::DistLocalInit, s.loc, "distributed local '" + s.name + "' must be declared at the top of the method body");
        const Expr* init = s.expr.get();
        bool ok = init && init->kind == ExprKind::NewArray && init->type == s.type &&
                  static_cast<int>(init->kids.size()) == s.type.rank;
        if (ok)
          for (const auto& k : init->kids) ok = ok && master_computable(*k, m, info);
        if (!ok)
          err(DiagCode::DistLocalInit, s.loc,
              "distributed local '" + s.name + "' must be initialized with 'new' and sizes computable from the parameters");
      }
      if (s.shared) {
        if (!somd) err(DiagCode::SharedInvalid, s.loc, "shared variable '" + s.name + "' outside a SOMD method");
        if (!s.type.is_scalar()) err(DiagCode::SharedInvalid, s.loc, "shared variable '" + s.name + "' must be a scalar");
        if (!top.count(&s)) err(DiagCode::SharedInvalid, s.loc, "shared variable '" + s.name + "' must be declared at the top of the method body");
        if (s.expr && !master_computable(*s.expr, m, info))
          err(DiagCode::SharedInvalid, s.loc, "initial value of shared '" + s.name + "' must be computable from the parameters");
      }
    });

    check_reduce(m, info);

    for (const Stmt* l : info.loops_needing_form)
      err(DiagCode::ParallelLoopForm, l->loc,
          "loop over a distributed dimension must have the form 'for (int i = lo; i < hi; i++)'");
    for (const auto& [loop, b] : info.parallel) {
      auto f = loop_form(*loop);
      if (!master_computable(*f->lower, m, info) || !master_computable(*f->upper, m, info))
        err(DiagCode::LoopBoundLocal, loop->loc,
            "bounds of a distributed loop may only use parameters, constants and array lengths");
    }

    Ctx c;
    walk(*m.body, c, m, info);
  }

  void check_reduce(const MethodDecl& m, const MethodInfo& info) {
    if (!m.reduce) {
      if (m.is_somd && m.return_type.is_scalar())
        err(DiagCode::MissingReduction, m.loc,
            "SOMD method '" + m.name + "' returns a scalar but declares no reduce qualifier");
      return;
    }
    const ReduceSpec& r = *m.reduce;
    switch (r.kind) {
      case ReduceKind::PrimOp:
        if (!m.return_type.is_numeric())
          err(DiagCode::ReduceTypeMismatch, r.loc, std::string("reduce(") + op_symbol(r.op) + ") needs a numeric scalar return type");
        break;
      case ReduceKind::Self: {
        bool ok = false;
        for (const auto& p : m.params)
          if (p.dist && p.type.rank == 1 && p.type.base == m.return_type.base) ok = true;
        if (!m.return_type.is_scalar() || !ok)
          err(DiagCode::ReduceTypeMismatch, r.loc,
              "reduce(self) needs a scalar return type matching the elements of a distributed 1D parameter");
        break;
      }
      case ReduceKind::User:
        if (!reg_.reducer(r.user_name))
          err(DiagCode::UnknownStrategy, r.loc, "no reduction named '" + r.user_name + "' is registered");
        else if (std::find(p_.user_strategies.begin(), p_.user_strategies.end(), r.user_name) == p_.user_strategies.end())
          p_.user_strategies.push_back(r.user_name);
        for (const auto& a : r.user_args)
          if (!master_computable(*a, m, info))
            err(DiagCode::InvalidDistSpec, a->loc, "reduction arguments must be computable from the parameters");
        break;
      case ReduceKind::ArrayAssembly:
        break;
    }
  }

  void walk(const Stmt& s, Ctx c, const MethodDecl& m, const MethodInfo& info) {
    switch (s.kind) {
      case StmtKind::VarDecl:
      case StmtKind::ExprStmt:
        if (s.expr) walk_expr(*s.expr, c, m, info);
        return;
      case StmtKind::Return:
        if (m.is_somd && c.parallel)
          err(DiagCode::DivergentSync, s.loc, "return inside a distributed loop");
        if (s.expr) walk_expr(*s.expr, c, m, info);
        return;
      case StmtKind::Block:
        for (const auto& k : s.stmts) walk(*k, c, m, info);
        return;
      case StmtKind::If: {
        walk_expr(*s.expr, c, m, info);
        Ctx in = c;
        in.cond = true;
        walk(*s.body, in, m, info);
        if (s.else_body) walk(*s.else_body, in, m, info);
        return;
      }
      case StmtKind::While: {
        Ctx in = c;
        in.cond = true;
        walk_expr(*s.expr, in, m, info);
        walk(*s.body, in, m, info);
        return;
      }
      case StmtKind::For: {
        Ctx in = c;
        if (info.binding(&s)) {
          in.parallel = true;
        } else {
          auto f = loop_form(s);
          if (!f || !master_computable(*f->lower, m, info) || !master_computable(*f->upper, m, info))
            in.nonuniform = true;
        }
        if (s.init) walk(*s.init, c, m, info);
        if (s.expr) walk_expr(*s.expr, in, m, info);
        if (s.step) walk_expr(*s.step, in, m, info);
        walk(*s.body, in, m, info);
        return;
      }
      case StmtKind::Sync:
        check_sync(s, c, m);
        walk(*s.body, c, m, info);
        return;
      default:
        return;
    }
  }

  void check_sync(const Stmt& s, const Ctx& c, const MethodDecl& m) {
    if (!m.is_somd) {
      err(DiagCode::DivergentSync, s.loc, "sync block outside a SOMD method");
      return;
    }
    if (c.parallel)
      err(DiagCode::DivergentSync, s.loc, "sync block inside a distributed loop");
    else if (c.cond)
      err(DiagCode::DivergentSync, s.loc, "sync block under a condition; every instance must reach it");
    else if (c.nonuniform)
      err(DiagCode::DivergentSync, s.loc, "sync block inside a loop whose bounds are not computable from the parameters");
    if (!s.reduce) return;
    const ReduceSpec& r = *s.reduce;
    if (s.target.empty()) {
      err(DiagCode::SyncTargetInvalid, s.loc, "sync with reduce needs a target variable");
      return;
    }
    if (s.target_slot < 0) return;
    const Type& t = m.slot_types[static_cast<std::size_t>(s.target_slot)];
    if (!t.is_numeric())
      err(DiagCode::SyncTargetInvalid, s.loc, "sync reduction target '" + s.target + "' must be a numeric scalar");
    if (r.kind == ReduceKind::Self)
      err(DiagCode::SyncTargetInvalid, r.loc, "reduce(self) cannot be applied to a sync block");
    if (r.kind == ReduceKind::User && !reg_.reducer(r.user_name))
      err(DiagCode::UnknownStrategy, r.loc, "no reduction named '" + r.user_name + "' is registered");
    if (r.kind == ReduceKind::User && !r.user_args.empty())
      err(DiagCode::SyncTargetInvalid, r.loc, "a sync reduction takes no arguments");
    if (r.kind == ReduceKind::PrimOp) {
      for_each_stmt(*m.body, [&](const Stmt& d) {
        if (d.kind != StmtKind::VarDecl || d.slot != s.target_slot || !d.shared) return;
        double id = 0;
        reduce_identity(r.op, id);
        bool is_identity = !d.expr ||
                           ((d.expr->kind == ExprKind::IntLit || d.expr->kind == ExprKind::LongLit) &&
                            static_cast<double>(d.expr->ival) == id) ||
                           (d.expr->kind == ExprKind::DoubleLit && d.expr->dval == id);
        if (!is_identity)
          warn(DiagCode::SharedNonIdentityInit, d.loc,
               "shared '" + d.name + "' starts from a value that is not the identity of '" + op_symbol(r.op) +
                   "'; every instance's copy is combined as-is");
      });
    }
  }

  void walk_expr(const Expr& e, Ctx c, const MethodDecl& m, const MethodInfo& info) {
    if (e.kind == ExprKind::Binary && (e.op == Op::And || e.op == Op::Or)) {
      walk_expr(*e.kids[0], c, m, info);
      Ctx in = c;
      in.cond = true;
      walk_expr(*e.kids[1], in, m, info);
      return;
    }
    if (e.kind == ExprKind::Cond) {
      walk_expr(*e.kids[0], c, m, info);
      Ctx in = c;
      in.cond = true;
      walk_expr(*e.kids[1], in, m, info);
      walk_expr(*e.kids[2], in, m, info);
      return;
    }
    if (e.kind == ExprKind::Call && m.is_somd) check_nested_call(e, c, m, info);
    for (const auto& k : e.kids) walk_expr(*k, c, m, info);
  }

  void check_nested_call(const Expr& e, const Ctx& c, const MethodDecl& m, const MethodInfo& info) {
    const MethodDecl& callee = p_.methods[static_cast<std::size_t>(e.method_index)];
    if (!callee.is_somd) return;
    if (!callee.reduce) {
      err(DiagCode::NestedArrayReductionUnsupported, e.loc,
          "call to SOMD method '" + callee.name + "' from '" + m.name + "' would need a nested array reduction");
      return;
    }
    if (callee.return_type.is_array()) {
      err(DiagCode::NestedArrayReductionUnsupported, e.loc,
          "intermediate reductions of arrays are not supported ('" + callee.name + "')");
      return;
    }
    if (c.parallel || c.nonuniform) {
      err(DiagCode::DivergentNestedReduction, e.loc,
          "call to reducing method '" + callee.name + "' inside a distributed or non-uniform loop");
      return;
    }
    if (c.cond) {
      err(DiagCode::ConditionalNestedReduction, e.loc,
          "call to reducing method '" + callee.name + "' cannot be conditional; every instance must take part");
      return;
    }
    bool has_dist = false;
    for (const auto& a : e.kids)
      if (a->kind == ExprKind::Var && info.dist_for_slot(a->slot)) has_dist = true;
    if (!has_dist)
      err(DiagCode::NestedReductionWithoutDist, e.loc,
          "intermediate reduction '" + callee.name + "' must receive a distributed value of '" + m.name + "'");
  }
};

}  // namespace

bool is_somd_method(const MethodDecl& m) {
  if (m.reduce) return true;
  for (const auto& p : m.params)
    if (p.dist) return true;
  bool dist_local = false;
  if (m.body)
    for_each_stmt(*m.body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl && s.dist) dist_local = true;
    });
  return dist_local;
}

bool reduce_identity(Op op, double& identity) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      identity = 0.0;
      return true;
    case Op::Mul:
      identity = 1.0;
      return true;
    default:
      return false;
  }
}

std::vector<Diagnostic> validate(Program& p, const StrategyRegistry& registry) {
  std::vector<Diagnostic> diags;
  Checker(p, registry, diags).run();
  return diags;
}

Program compile(std::string_view source, std::vector<Diagnostic>* warnings,
                const StrategyRegistry& registry) {
  Program p = parse(source);
  std::vector<Diagnostic> diags = validate(p, registry);
  if (has_errors(diags)) throw CompileError(std::move(diags));
  if (warnings) *warnings = std::move(diags);
  return p;
}

}  // namespace somd
