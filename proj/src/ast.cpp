#include "somd/ast.hpp"

#include <algorithm>

namespace somd {

std::string to_string(const Type& t) {
  std::string s;
  switch (t.base) {
    case BaseType::Void: s = "void"; break;
    case BaseType::Int: s = "int"; break;
    case BaseType::Long: s = "long"; break;
    case BaseType::Double: s = "double"; break;
    case BaseType::Bool: s = "boolean"; break;
  }
  for (int i = 0; i < t.rank; ++i) s += "[]";
  return s;
}

const char* op_symbol(Op op) {
  switch (op) {
    case Op::None: return "";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Mod: return "%";
    case Op::Shl: return "<<";
    case Op::Shr: return ">>";
    case Op::Ushr: return ">>>";
    case Op::BitAnd: return "&";
    case Op::BitOr: return "|";
    case Op::BitXor: return "^";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Neg: return "-";
    case Op::Plus: return "+";
    case Op::Not: return "!";
    case Op::BitNot: return "~";
  }
  return "?";
}

ExprPtr Expr::clone() const {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->loc = loc;
  e->op = op;
  e->ival = ival;
  e->dval = dval;
  e->bval = bval;
  e->name = name;
  e->slot = slot;
  e->global_index = global_index;
  e->method_index = method_index;
  e->type = type;
  e->dim = dim;
  e->dist_id = dist_id;
  e->aux_id = aux_id;
  e->upper = upper;
  e->prefix = prefix;
  e->increment = increment;
  e->kids.reserve(kids.size());
  for (const auto& k : kids) e->kids.push_back(k ? k->clone() : nullptr);
  return e;
}

ExprPtr make_int(std::int64_t v, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::IntLit;
  e->ival = v;
  e->loc = loc;
  e->type = Type{BaseType::Int, 0};
  return e;
}

ExprPtr make_var(const std::string& name, int slot, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Var;
  e->name = name;
  e->slot = slot;
  e->loc = loc;
  return e;
}

ExprPtr make_binary(Op op, ExprPtr l, ExprPtr r, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Binary;
  e->op = op;
  e->loc = loc;
  e->kids.push_back(std::move(l));
  e->kids.push_back(std::move(r));
  return e;
}

ExprPtr make_math(const std::string& fn, ExprPtr a, ExprPtr b, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Math;
  e->name = fn;
  e->loc = loc;
  e->kids.push_back(std::move(a));
  if (b) e->kids.push_back(std::move(b));
  return e;
}

namespace {

std::vector<ExprPtr> clone_all(const std::vector<ExprPtr>& v) {
  std::vector<ExprPtr> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(e->clone());
  return out;
}

}  // namespace

DistSpec DistSpec::clone() const {
  DistSpec d;
  d.strategy = strategy;
  d.user_name = user_name;
  d.user_args = clone_all(user_args);
  d.view = view;
  d.polyview = polyview;
  d.dims = dims;
  d.loc = loc;
  return d;
}

ViewPair DistSpec::halo(int d) const {
  const auto& v = polyview.empty() ? view : polyview;
  if (d >= 1 && static_cast<std::size_t>(d) <= v.size()) return v[d - 1];
  return {};
}

bool DistSpec::partitions(int d, int rank) const {
  if (d < 1 || d > rank) return false;
  if (strategy == DistStrategy::User) return d == 1;
  if (dims.empty()) return true;
  return std::find(dims.begin(), dims.end(), d) != dims.end();
}

ReduceSpec ReduceSpec::clone() const {
  ReduceSpec r;
  r.kind = kind;
  r.op = op;
  r.user_name = user_name;
  r.user_args = clone_all(user_args);
  r.loc = loc;
  return r;
}

std::string to_string(const ReduceSpec& r) {
  switch (r.kind) {
    case ReduceKind::PrimOp: return std::string(op_symbol(r.op));
    case ReduceKind::ArrayAssembly: return "assemble";
    case ReduceKind::Self: return "self";
    case ReduceKind::User: return r.user_name;
  }
  return "?";
}

StmtPtr Stmt::clone() const {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->loc = loc;
  s->type = type;
  s->name = name;
  s->slot = slot;
  s->shared = shared;
  if (dist) s->dist = dist->clone();
  if (expr) s->expr = expr->clone();
  if (init) s->init = init->clone();
  if (step) s->step = step->clone();
  if (body) s->body = body->clone();
  if (else_body) s->else_body = else_body->clone();
  s->stmts.reserve(stmts.size());
  for (const auto& c : stmts) s->stmts.push_back(c->clone());
  s->target = target;
  s->target_slot = target_slot;
  if (reduce) s->reduce = reduce->clone();
  s->loop_rank = loop_rank;
  s->induction = induction;
  s->induction_slot = induction_slot;
  s->kernel_id = kernel_id;
  return s;
}

StmtPtr make_block(std::vector<StmtPtr> stmts, SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Block;
  s->loc = loc;
  s->stmts = std::move(stmts);
  return s;
}

std::optional<ReduceSpec> MethodDecl::effective_reduce() const {
  if (reduce) return reduce->clone();
  if (return_type.is_array()) {
    ReduceSpec r;
    r.kind = ReduceKind::ArrayAssembly;
    return r;
  }
  return std::nullopt;
}

MethodDecl MethodDecl::clone() const {
  MethodDecl m;
  m.name = name;
  m.return_type = return_type;
  for (const auto& p : params) {
    Param q;
    q.name = p.name;
    q.type = p.type;
    if (p.dist) q.dist = p.dist->clone();
    q.loc = p.loc;
    q.slot = p.slot;
    q.written = p.written;
    m.params.push_back(std::move(q));
  }
  if (reduce) m.reduce = reduce->clone();
  if (body) m.body = body->clone();
  m.loc = loc;
  m.num_slots = num_slots;
  m.slot_types = slot_types;
  m.slot_names = slot_names;
  m.is_somd = is_somd;
  return m;
}

const MethodDecl* Program::find(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

int Program::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (methods[i].name == name) return static_cast<int>(i);
  return -1;
}

Program Program::clone() const {
  Program p;
  for (const auto& m : methods) p.methods.push_back(m.clone());
  for (const auto& g : globals) {
    GlobalConst c;
    c.name = g.name;
    c.type = g.type;
    c.init = g.init->clone();
    c.loc = g.loc;
    p.globals.push_back(std::move(c));
  }
  p.user_strategies = user_strategies;
  return p;
}

}  // namespace somd
