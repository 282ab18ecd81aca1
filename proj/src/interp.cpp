#include "somd/interp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "somd/diagnostics.hpp"

namespace somd {

namespace {

using K = Value::Kind;

[[noreturn]] void not_here(const char* what) {
  throw std::logic_error(std::string(what) + " is only meaningful inside a backend");
}

std::int32_t wrap32(std::int64_t v) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v)));
}

bool either(const Value& a, const Value& b, K k) { return a.kind == k || b.kind == k; }

double java_max(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
  if (a == 0.0 && b == 0.0) return std::signbit(a) ? b : a;
  return a > b ? a : b;
}

double java_min(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
  if (a == 0.0 && b == 0.0) return std::signbit(a) ? a : b;
  return a < b ? a : b;
}

constexpr int kMaxDepth = 1000;

}  // namespace

std::int64_t ExecHooks::range_bound(int, int, bool) { not_here("an index range"); }
void ExecHooks::result_write(const Value&) { not_here("a results write"); }
void ExecHooks::fence_wait() { not_here("a fence"); }
Value ExecHooks::sync_combine(const ReduceSpec&, const Value&) { not_here("a sync reduction"); }
Value ExecHooks::aux_call(int, std::vector<Value>&, SourceLoc) { not_here("an intermediate reduction"); }
void ExecHooks::launch(int, Frame&, SourceLoc) { not_here("a kernel launch"); }
bool ExecHooks::intercept_call(int, std::vector<Value>&, Value&) { return false; }
void ExecHooks::on_access(const Array*, std::int64_t, std::int64_t, bool, SourceLoc) {}
void ExecHooks::on_alloc(const ArrayPtr&) {}

Value apply_binary(Op op, const Value& a, const Value& b, SourceLoc loc) {
  switch (op) {
    case Op::And: return Value::of_bool(a.i && b.i);
    case Op::Or: return Value::of_bool(a.i || b.i);
    case Op::Eq:
    case Op::Ne: {
      bool eq = either(a, b, K::Double) ? a.as_double() == b.as_double() : a.i == b.i;
      return Value::of_bool(op == Op::Eq ? eq : !eq);
    }
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      bool r;
      if (either(a, b, K::Double)) {
        double x = a.as_double(), y = b.as_double();
        r = op == Op::Lt ? x < y : op == Op::Le ? x <= y : op == Op::Gt ? x > y : x >= y;
      } else {
        std::int64_t x = a.i, y = b.i;
        r = op == Op::Lt ? x < y : op == Op::Le ? x <= y : op == Op::Gt ? x > y : x >= y;
      }
      return Value::of_bool(r);
    }
    case Op::Shl:
    case Op::Shr:
    case Op::Ushr: {
      if (a.kind == K::Long) {
        int n = static_cast<int>(b.i & 63);
        auto u = static_cast<std::uint64_t>(a.i);
        if (op == Op::Shl) return Value::of_long(static_cast<std::int64_t>(u << n));
        if (op == Op::Ushr) return Value::of_long(static_cast<std::int64_t>(u >> n));
        return Value::of_long(a.i >> n);
      }
      int n = static_cast<int>(b.i & 31);
      auto u = static_cast<std::uint32_t>(a.i);
      if (op == Op::Shl) return Value::of_int(static_cast<std::int32_t>(u << n));
      if (op == Op::Ushr) return Value::of_int(static_cast<std::int32_t>(u >> n));
      return Value::of_int(static_cast<std::int32_t>(a.i) >> n);
    }
    case Op::BitAnd:
    case Op::BitOr:
    case Op::BitXor: {
      std::int64_t r = op == Op::BitAnd ? (a.i & b.i) : op == Op::BitOr ? (a.i | b.i) : (a.i ^ b.i);
      if (a.kind == K::Bool && b.kind == K::Bool) return Value::of_bool(r != 0);
      if (either(a, b, K::Long)) return Value::of_long(r);
      return Value::of_int(wrap32(r));
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod: {
      if (either(a, b, K::Double)) {
        double x = a.as_double(), y = b.as_double();
        switch (op) {
          case Op::Add: return Value::of_double(x + y);
          case Op::Sub: return Value::of_double(x - y);
          case Op::Mul: return Value::of_double(x * y);
          case Op::Div: return Value::of_double(x / y);
          default: return Value::of_double(std::fmod(x, y));
        }
      }
      bool wide = either(a, b, K::Long);
      auto x = static_cast<std::uint64_t>(a.i);
      auto y = static_cast<std::uint64_t>(b.i);
      std::int64_t r = 0;
      switch (op) {
        case Op::Add: r = static_cast<std::int64_t>(x + y); break;
        case Op::Sub: r = static_cast<std::int64_t>(x - y); break;
        case Op::Mul: r = static_cast<std::int64_t>(x * y); break;
        default: {
          if (b.i == 0) throw RuntimeError(loc, "division by zero");
          std::int64_t lo = wide ? std::numeric_limits<std::int64_t>::min()
                                 : std::numeric_limits<std::int32_t>::min();
          if (a.i == lo && b.i == -1)
            r = op == Op::Div ? lo : 0;
          else
            r = op == Op::Div ? a.i / b.i : a.i % b.i;
        }
      }
      return wide ? Value::of_long(r) : Value::of_int(wrap32(r));
    }
    default:
      throw std::logic_error("not a binary operator");
  }
}

Value apply_unary(Op op, const Value& a, SourceLoc) {
  switch (op) {
    case Op::Not: return Value::of_bool(!a.i);
    case Op::Neg:
      if (a.kind == K::Double) return Value::of_double(-a.d);
      if (a.kind == K::Long) return Value::of_long(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(a.i)));
      return Value::of_int(wrap32(-a.i));
    case Op::BitNot:
      if (a.kind == K::Long) return Value::of_long(~a.i);
      return Value::of_int(wrap32(~a.i));
    case Op::Plus:
      return a;
    default:
      throw std::logic_error("not a unary operator");
  }
}

Value apply_math(const std::string& fn, const std::vector<Value>& args, SourceLoc loc) {
  auto d = [&](std::size_t k) { return args[k].as_double(); };
  if (fn == "abs") {
    const Value& a = args[0];
    if (a.kind == K::Double) return Value::of_double(std::fabs(a.d));
    if (a.kind == K::Long) return a.i < 0 ? apply_unary(Op::Neg, a) : a;
    return a.i < 0 ? apply_unary(Op::Neg, a) : a;
  }
  if (fn == "max" || fn == "min") {
    const Value& a = args[0];
    const Value& b = args[1];
    bool mx = fn == "max";
    if (either(a, b, K::Double)) return Value::of_double(mx ? java_max(d(0), d(1)) : java_min(d(0), d(1)));
    std::int64_t r = mx ? std::max(a.i, b.i) : std::min(a.i, b.i);
    return either(a, b, K::Long) ? Value::of_long(r) : Value::of_int(static_cast<std::int32_t>(r));
  }
  if (fn == "sqrt") return Value::of_double(std::sqrt(d(0)));
  if (fn == "pow") return Value::of_double(std::pow(d(0), d(1)));
  if (fn == "exp") return Value::of_double(std::exp(d(0)));
  if (fn == "log") return Value::of_double(std::log(d(0)));
  if (fn == "sin") return Value::of_double(std::sin(d(0)));
  if (fn == "cos") return Value::of_double(std::cos(d(0)));
  if (fn == "tan") return Value::of_double(std::tan(d(0)));
  if (fn == "atan") return Value::of_double(std::atan(d(0)));
  if (fn == "atan2") return Value::of_double(std::atan2(d(0), d(1)));
  if (fn == "floor") return Value::of_double(std::floor(d(0)));
  if (fn == "ceil") return Value::of_double(std::ceil(d(0)));
  throw RuntimeError(loc, "unknown math function Math." + fn);
}

Evaluator::Evaluator(const Program& program, ExecHooks* hooks) : prog_(program), hooks_(hooks) {
  Frame empty;
  globals_.reserve(prog_.globals.size());
  for (const auto& g : prog_.globals) globals_.push_back(convert(eval(*g.init, empty), g.type.base));
}

Value Evaluator::call(int index, std::vector<Value> args) {
  Value out;
  if (hooks_ && hooks_->intercept_call(index, args, out)) return out;
  return invoke(prog_.methods[static_cast<std::size_t>(index)], std::move(args));
}

Value Evaluator::invoke(const MethodDecl& m, std::vector<Value> args) {
  if (depth_ >= kMaxDepth) throw RuntimeError(m.loc, "call depth limit exceeded in " + m.name);
  Frame f;
  f.slots.resize(static_cast<std::size_t>(m.num_slots));
  for (std::size_t k = 0; k < m.params.size() && k < args.size(); ++k) {
    const Param& p = m.params[k];
    Value& slot = f.slots[static_cast<std::size_t>(p.slot)];
    if (!p.type.is_array())
      slot = convert(args[k], p.type.base);
    else if (p.written && args[k].arr)
      slot = Value::of_array(args[k].arr->deep_copy());  // the caller never observes the writes
    else
      slot = std::move(args[k]);
  }
  ++depth_;
  Flow flow;
  try {
    flow = exec(*m.body, f);
  } catch (...) {
    --depth_;
    throw;
  }
  --depth_;
  if (flow == Flow::Return) return std::move(ret_);
  return Value{};
}

Evaluator::Flow Evaluator::exec(const Stmt& s, Frame& f) {
  switch (s.kind) {
    case StmtKind::VarDecl: {
      Value& slot = f.slots[static_cast<std::size_t>(s.slot)];
      if (s.expr) {
        Value v = eval(*s.expr, f);
        slot = s.type.is_array() ? std::move(v) : convert(v, s.type.base);
      } else {
        slot = default_value(s.type);
      }
      return Flow::Normal;
    }
    case StmtKind::ExprStmt:
      eval(*s.expr, f);
      return Flow::Normal;
    case StmtKind::Empty:
      return Flow::Normal;
    case StmtKind::Block:
      for (const auto& c : s.stmts) {
        Flow fl = exec(*c, f);
        if (fl != Flow::Normal) return fl;
      }
      return Flow::Normal;
    case StmtKind::If:
      if (eval(*s.expr, f).as_bool()) return exec(*s.body, f);
      if (s.else_body) return exec(*s.else_body, f);
      return Flow::Normal;
    case StmtKind::For: {
      if (s.init) exec(*s.init, f);
      for (;;) {
        if (s.expr && !eval(*s.expr, f).as_bool()) break;
        Flow fl = exec(*s.body, f);
        if (fl != Flow::Normal) return fl;
        if (s.step) eval(*s.step, f);
      }
      return Flow::Normal;
    }
    case StmtKind::While:
      while (eval(*s.expr, f).as_bool()) {
        Flow fl = exec(*s.body, f);
        if (fl != Flow::Normal) return fl;
      }
      return Flow::Normal;
    case StmtKind::Return:
      if (s.expr) {
        Value v = eval(*s.expr, f);
        ret_ = (s.type.is_scalar() && !v.is_array()) ? convert(v, s.type.base) : std::move(v);
      } else {
        ret_ = Value{};
      }
      return Flow::Return;
    case StmtKind::Sync:
      return exec(*s.body, f);
    case StmtKind::ResultWrite: {
      Value v = eval(*s.expr, f);
      if (s.type.is_scalar() && !v.is_array()) v = convert(v, s.type.base);
      lowered().result_write(v);
      return Flow::Halt;
    }
    case StmtKind::FenceWait:
      lowered().fence_wait();
      return Flow::Normal;
    case StmtKind::SyncCombine: {
      Value& slot = f.slots[static_cast<std::size_t>(s.target_slot)];
      Value combined = lowered().sync_combine(*s.reduce, slot);
      slot = slot.is_array() ? combined : convert(combined, base_of(slot));
      return Flow::Normal;
    }
    case StmtKind::Launch:
      lowered().launch(s.kernel_id, f, s.loc);
      return Flow::Normal;
  }
  return Flow::Normal;
}


ExecHooks& Evaluator::lowered() const {
  if (!hooks_) throw std::logic_error("lowered code needs a backend");
  return *hooks_;
}

Array* Evaluator::array_of(const Value& v, SourceLoc loc) const {
  if (!v.is_array() || !v.arr) throw RuntimeError(loc, "null array reference");
  return v.arr.get();
}

std::int64_t Evaluator::checked_index(const Array* a, const Value& idx, SourceLoc loc) const {
  std::int64_t k = idx.i;
  std::int64_t n = a->length();
  if (k < 0 || k >= n)
    throw RuntimeError(loc, "index " + std::to_string(k) + " out of bounds for length " +
                                std::to_string(n));
  return k;
}

Evaluator::Place Evaluator::locate(const Expr& e, Frame& f) {
  Place p;
  if (e.kind == ExprKind::Var) {
    p.var = e.slot >= 0 ? &f.slots[static_cast<std::size_t>(e.slot)]
                        : &globals_[static_cast<std::size_t>(e.global_index)];
    return p;
  }
  const Expr& base = *e.kids[0];
  if (base.kind == ExprKind::Index) {
    Array* root = array_of(eval(*base.kids[0], f), base.loc);
    std::int64_t i = checked_index(root, eval(*base.kids[1], f), base.loc);
    Array* row = array_of(Value::of_array(root->rows[static_cast<std::size_t>(i)]), base.loc);
    p.arr = row;
    p.idx = checked_index(row, eval(*e.kids[1], f), e.loc);
    p.root = root;
    p.i = i;
    p.j = p.idx;
    return p;
  }
  Array* a = array_of(eval(base, f), base.loc);
  p.arr = a;
  p.idx = checked_index(a, eval(*e.kids[1], f), e.loc);
  p.root = a;
  p.i = p.idx;
  return p;
}

Value Evaluator::load(const Place& p) const {
  if (p.var) return *p.var;
  if (p.arr->rank == 2) return Value::of_array(p.arr->rows[static_cast<std::size_t>(p.idx)]);
  return p.arr->get(p.idx);
}

void Evaluator::store(const Place& p, const Value& v, const Expr& target) {
  if (p.var) {
    *p.var = (target.type.is_scalar() && !v.is_array()) ? convert(v, target.type.base) : v;
    return;
  }
  if (hooks_ && hooks_->watch_access) hooks_->on_access(p.root, p.i, p.j, true, target.loc);
  if (p.arr->rank == 2)
    p.arr->rows[static_cast<std::size_t>(p.idx)] = v.arr;
  else
    p.arr->set(p.idx, v);
}

Value Evaluator::eval_index(const Expr& e, Frame& f) {
  Place p = locate(e, f);
  if (hooks_ && hooks_->watch_access) hooks_->on_access(p.root, p.i, p.j, false, e.loc);
  return load(p);
}

Value Evaluator::eval(const Expr& e, Frame& f) {
  switch (e.kind) {
    case ExprKind::IntLit: return Value::of_int(static_cast<std::int32_t>(e.ival));
    case ExprKind::LongLit: return Value::of_long(e.ival);
    case ExprKind::DoubleLit: return Value::of_double(e.dval);
    case ExprKind::BoolLit: return Value::of_bool(e.bval);
    case ExprKind::Var:
      return e.slot >= 0 ? f.slots[static_cast<std::size_t>(e.slot)]
                         : globals_[static_cast<std::size_t>(e.global_index)];
    case ExprKind::Index:
      return eval_index(e, f);
    case ExprKind::Length: {
      Value b = eval(*e.kids[0], f);
      if (!b.is_array() || !b.arr) throw RuntimeError(e.loc, "null array reference");
      return Value::of_int(static_cast<std::int32_t>(b.arr->length()));
    }
    case ExprKind::Unary:
      return apply_unary(e.op, eval(*e.kids[0], f), e.loc);
    case ExprKind::Binary: {
      if (e.op == Op::And) {
        if (!eval(*e.kids[0], f).as_bool()) return Value::of_bool(false);
        return Value::of_bool(eval(*e.kids[1], f).as_bool());
      }
      if (e.op == Op::Or) {
        if (eval(*e.kids[0], f).as_bool()) return Value::of_bool(true);
        return Value::of_bool(eval(*e.kids[1], f).as_bool());
      }
      Value a = eval(*e.kids[0], f);
      Value b = eval(*e.kids[1], f);
      return apply_binary(e.op, a, b, e.loc);
    }
    case ExprKind::Assign: {
      Place p = locate(*e.kids[0], f);
      Value v;
      if (e.op == Op::None) {
        v = eval(*e.kids[1], f);
      } else {
        if (p.arr && hooks_ && hooks_->watch_access) hooks_->on_access(p.root, p.i, p.j, false, e.loc);
        Value cur = load(p);
        v = apply_binary(e.op, cur, eval(*e.kids[1], f), e.loc);
      }
      store(p, v, *e.kids[0]);
      return load(p);
    }
    case ExprKind::IncDec: {
      Place p = locate(*e.kids[0], f);
      if (p.arr && hooks_ && hooks_->watch_access) hooks_->on_access(p.root, p.i, p.j, false, e.loc);
      Value old = load(p);
      Value nv = apply_binary(e.increment ? Op::Add : Op::Sub, old, Value::of_int(1), e.loc);
      store(p, nv, *e.kids[0]);
      return e.prefix ? load(p) : old;
    }
    case ExprKind::Call: {
      std::vector<Value> args;
      args.reserve(e.kids.size());
      for (const auto& k : e.kids) args.push_back(eval(*k, f));
      return call(e.method_index, std::move(args));
    }
    case ExprKind::Math: {
      std::vector<Value> args;
      args.reserve(e.kids.size());
      for (const auto& k : e.kids) args.push_back(eval(*k, f));
      return apply_math(e.name, args, e.loc);
    }
    case ExprKind::NewArray: {
      std::int64_t n = eval(*e.kids[0], f).as_long();
      if (n < 0) throw RuntimeError(e.loc, "negative array size " + std::to_string(n));
      ArrayPtr a;
      if (e.type.rank == 1) {
        a = Array::make(e.type.base, n);
      } else {
        std::int64_t cols = -1;
        if (e.kids.size() > 1) {
          cols = eval(*e.kids[1], f).as_long();
          if (cols < 0) throw RuntimeError(e.loc, "negative array size " + std::to_string(cols));
        }
        a = Array::make2(e.type.base, n, cols);
      }
      if (hooks_ && hooks_->watch_access) hooks_->on_alloc(a);
      return Value::of_array(std::move(a));
    }
    case ExprKind::Cast:
      return convert(eval(*e.kids[0], f), e.type.base);
    case ExprKind::Cond:
      return eval(*e.kids[eval(*e.kids[0], f).as_bool() ? 1 : 2], f);
    case ExprKind::RangeBound:
      return Value::of_int(static_cast<std::int32_t>(lowered().range_bound(e.dist_id, e.dim, e.upper)));
    case ExprKind::AuxCall: {
      std::vector<Value> args;
      args.reserve(e.kids.size());
      for (const auto& k : e.kids) args.push_back(eval(*k, f));
      return lowered().aux_call(e.aux_id, args, e.loc);
    }
  }
  throw std::logic_error("unhandled expression kind");
}

Value interpret(const Program& p, const std::string& method, std::vector<Value> args) {
  int idx = p.index_of(method);
  if (idx < 0) throw std::invalid_argument("no method named " + method);
  Evaluator ev(p);
  return ev.invoke(p.methods[static_cast<std::size_t>(idx)], std::move(args));
}

}  // namespace somd
