#include "somd/plan_gpu.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "somd/analysis.hpp"
#include "somd/printer.hpp"

namespace somd {

GridConfig grid_config(std::int64_t problem_size, std::int64_t max_group_size) {
  if (max_group_size < 1) max_group_size = 1;
  if (problem_size < 0) problem_size = 0;
  GridConfig g;
  g.group_size = max_group_size;
  g.n_groups = (problem_size + max_group_size - 1) / max_group_size;
  g.total_threads = g.n_groups * g.group_size;
  return g;
}

namespace {

const Type kInt{BaseType::Int, 0};

bool is_var(const Expr* e, int slot) { return e && e->kind == ExprKind::Var && slot >= 0 && e->slot == slot; }

bool refs_slot(const Expr& e, int slot) {
  bool hit = false;
  for_each_expr(e, [&](const Expr& x) {
    if (x.kind == ExprKind::Var && x.slot == slot) hit = true;
  });
  return hit;
}

ExprPtr typed_var(const std::string& name, int slot, Type t) {
  auto e = make_var(name, slot);
  e->type = t;
  return e;
}

ExprPtr int_op(Op op, ExprPtr a, ExprPtr b) {
  auto e = make_binary(op, std::move(a), std::move(b));
  e->type = (op == Op::And || op == Op::Or || op == Op::Ge || op == Op::Lt || op == Op::Eq) ? Type{BaseType::Bool, 0} : kInt;
  return e;
}

StmtPtr int_decl(const std::string& name, int slot, ExprPtr init, SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::VarDecl;
  s->type = kInt;
  s->name = name;
  s->slot = slot;
  s->expr = std::move(init);
  s->loc = loc;
  return s;
}

std::string loc_text(SourceLoc l) { return std::to_string(l.line) + ":" + std::to_string(l.col); }

/// Whether a loop body (or a whole method body) can run as one GPU thread per iteration.
struct Scan {
  std::string why;
  std::set<int> declared;
  std::map<int, bool> arrays;  // outside array slot -> written
  std::set<int> scalars;       // outside scalars read
  int acc = -1;
  Op acc_op = Op::None;
};

class Scanner {
 public:
  Scanner(const Program& p, const MethodDecl& m, std::vector<int> induction, bool scalar_mode)
      : p_(p), m_(m), ind_(std::move(induction)), scalar_(scalar_mode) {}

  Scan run(const Stmt& body, const std::vector<const Expr*>& bounds = {}) {
    for_each_stmt(body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl) out_.declared.insert(s.slot);
    });
    for (const Expr* b : bounds) expr(*b, Ctx::Value);
    stmt(body);
    if (out_.acc >= 0 && out_.scalars.count(out_.acc))
      fail("accumulator '" + name(out_.acc) + "' is also read inside the loop", body.loc);
    return out_;
  }

 private:
  enum class Ctx { Value, IndexBase, RowBase, LengthOf };

  const Program& p_;
  const MethodDecl& m_;
  std::vector<int> ind_;
  bool scalar_;
  Scan out_;
  std::map<int, int> write_pos_;  // written array -> index position holding the loop variable

  void fail(const std::string& why, SourceLoc loc) {
    if (out_.why.empty()) out_.why = why + " at " + loc_text(loc);
  }
  std::string name(int slot) const { return m_.slot_names[static_cast<std::size_t>(slot)]; }
  const Type& type(int slot) const { return m_.slot_types[static_cast<std::size_t>(slot)]; }
  bool is_ind(int slot) const {
    for (int s : ind_)
      if (s == slot) return true;
    return false;
  }
  bool outside(int slot) const { return slot >= 0 && !out_.declared.count(slot) && !is_ind(slot); }
  bool outside_2d(const Expr& e) const {
    return e.kind == ExprKind::Var && outside(e.slot) && type(e.slot).rank == 2;
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::VarDecl:
        if (!scalar_ && s.type.is_array()) fail("array local '" + s.name + "' inside the loop", s.loc);
        if (s.expr) expr(*s.expr, Ctx::Value);
        return;
      case StmtKind::ExprStmt:
        expr(*s.expr, Ctx::Value);
        return;
      case StmtKind::Block:
        for (const auto& c : s.stmts) stmt(*c);
        return;
      case StmtKind::If:
        expr(*s.expr, Ctx::Value);
        stmt(*s.body);
        if (s.else_body) stmt(*s.else_body);
        return;
      case StmtKind::For:
        if (s.init) stmt(*s.init);
        if (s.expr) expr(*s.expr, Ctx::Value);
        if (s.step) expr(*s.step, Ctx::Value);
        stmt(*s.body);
        return;
      case StmtKind::While:
        expr(*s.expr, Ctx::Value);
        stmt(*s.body);
        return;
      case StmtKind::Return:
        if (!scalar_) fail("return inside the loop", s.loc);
        if (s.expr) expr(*s.expr, Ctx::Value);
        return;
      case StmtKind::Empty:
        return;
      default:
        fail("synchronization inside the loop", s.loc);
    }
  }

  void expr(const Expr& e, Ctx ctx) {
    switch (e.kind) {
      case ExprKind::Var: {
        if (e.slot < 0 || !outside(e.slot)) return;
        const Type& t = type(e.slot);
        if (t.is_array()) {
          bool ok = (t.rank == 1 && (ctx == Ctx::IndexBase || ctx == Ctx::LengthOf)) ||
                    (t.rank == 2 && (ctx == Ctx::RowBase || ctx == Ctx::LengthOf));
          if (!ok) fail("array '" + e.name + "' used as a value", e.loc);
          out_.arrays.emplace(e.slot, false);
        } else {
          out_.scalars.insert(e.slot);
        }
        return;
      }
      case ExprKind::Index: {
        const Expr& b = *e.kids[0];
        if (b.kind == ExprKind::Index && outside_2d(*b.kids[0])) {
          expr(*b.kids[0], Ctx::RowBase);
          expr(*b.kids[1], Ctx::Value);
        } else {
          expr(b, Ctx::IndexBase);
        }
        expr(*e.kids[1], Ctx::Value);
        return;
      }
      case ExprKind::Length: {
        const Expr& k = *e.kids[0];
        if (k.kind == ExprKind::Var) {
          expr(k, Ctx::LengthOf);
        } else if (k.kind == ExprKind::Index && outside_2d(*k.kids[0])) {
          expr(*k.kids[0], Ctx::RowBase);
          expr(*k.kids[1], Ctx::Value);
        } else {
          expr(k, Ctx::Value);
        }
        return;
      }
      case ExprKind::Assign:
      case ExprKind::IncDec:
        write(e);
        return;
      case ExprKind::Call: {
        const MethodDecl& callee = p_.methods[static_cast<std::size_t>(e.method_index)];
        if (callee.is_somd) fail("call to SOMD method '" + callee.name + "'", e.loc);
        for (const auto& a : e.kids) {
          if (a->type.is_array()) fail("array passed to '" + callee.name + "'", a->loc);
          expr(*a, Ctx::Value);
        }
        return;
      }
      case ExprKind::NewArray:
        if (!scalar_) fail("array allocation inside the loop", e.loc);
        for (const auto& k : e.kids) expr(*k, Ctx::Value);
        return;
      case ExprKind::AuxCall:
        fail("intermediate reduction inside the loop", e.loc);
        return;
      case ExprKind::RangeBound:
        fail("lowered range bound", e.loc);
        return;
      default:
        for (const auto& k : e.kids) expr(*k, Ctx::Value);
    }
  }

  void write(const Expr& e) {
    const Expr& t = *e.kids[0];
    const bool plain = e.kind == ExprKind::Assign && e.op == Op::None;
    if (t.kind == ExprKind::Var) {
      if (t.slot < 0 || is_ind(t.slot)) {
        fail("assignment to '" + t.name + "'", e.loc);
        return;
      }
      if (!outside(t.slot)) {
        if (e.kind == ExprKind::Assign) expr(*e.kids[1], Ctx::Value);
        return;
      }
      // Only accumulation into a host scalar is allowed.
      const Expr* rhs = nullptr;
      Op op = Op::None;
      if (e.kind == ExprKind::Assign && (e.op == Op::Add || e.op == Op::Sub || e.op == Op::Mul)) {
        op = e.op;
        rhs = e.kids[1].get();
      } else if (plain) {
        const Expr& r = *e.kids[1];
        if (r.kind == ExprKind::Binary && (r.op == Op::Add || r.op == Op::Sub || r.op == Op::Mul) &&
            is_var(r.kids[0].get(), t.slot)) {
          op = r.op;
          rhs = r.kids[1].get();
        }
      }
      if (!rhs || refs_slot(*rhs, t.slot)) {
        fail("writes host variable '" + t.name + "'", e.loc);
        return;
      }
      Op kind = op == Op::Mul ? Op::Mul : Op::Add;
      if (out_.acc >= 0 && out_.acc != t.slot) fail("accumulates into two host variables", e.loc);
      if (out_.acc_op != Op::None && out_.acc_op != kind) fail("mixes additive and multiplicative accumulation", e.loc);
      out_.acc = t.slot;
      out_.acc_op = kind;
      expr(*rhs, Ctx::Value);
      return;
    }
    if (t.kind != ExprKind::Index) {
      fail("unsupported assignment target", e.loc);
      return;
    }
    const Expr* root = nullptr;
    const Expr* first = nullptr;
    const Expr* second = nullptr;
    if (t.kids[0]->kind == ExprKind::Index) {
      root = t.kids[0]->kids[0].get();
      first = t.kids[0]->kids[1].get();
      second = t.kids[1].get();
    } else {
      root = t.kids[0].get();
      first = t.kids[1].get();
    }
    if (root->kind != ExprKind::Var) {
      fail("unsupported assignment target", e.loc);
      return;
    }
    if (outside(root->slot)) {
      if (!scalar_) {
        const bool two = ind_.size() == 2;
        int pos = -1;
        if (two) {
          if (second && is_var(first, ind_[0]) && is_var(second, ind_[1])) pos = 0;
        } else if (is_var(first, ind_[0])) {
          pos = 0;
        } else if (second && is_var(second, ind_[0])) {
          pos = 1;
        }
        auto [it, fresh] = write_pos_.emplace(root->slot, pos);
        if (pos < 0 || it->second != pos)
          fail("write to '" + root->name + "' is not indexed by the loop variable" + (two ? "s" : ""), e.loc);
        (void)fresh;
      }
      out_.arrays[root->slot] = true;
    }
    if (second) {
      if (outside(root->slot)) expr(*root, Ctx::RowBase);
      else expr(*root, Ctx::IndexBase);
      expr(*first, Ctx::Value);
      expr(*second, Ctx::Value);
    } else {
      expr(*root, Ctx::IndexBase);
      expr(*first, Ctx::Value);
    }
    if (e.kind == ExprKind::Assign) expr(*e.kids[1], Ctx::Value);
  }
};

/// Rewrites a cloned kernel body: 2D accesses use flat indices, shapes come from kernel
/// scalars, the accumulator becomes the thread's contribution, returns write the results.
class KernelRewriter {
 public:
  struct Flat {
    std::string name;
    int rows_slot;
    int cols_slot;
  };
  std::map<int, Flat> flat;  // 2D buffer slot -> shape slots
  int acc = -1;
  int part = -1;
  std::string part_name;
  Type part_type;
  Type return_type;

  void stmt(Stmt& s) {
    if (s.expr) expr(s.expr);
    if (s.step) expr(s.step);
    if (s.init) stmt(*s.init);
    if (s.body) stmt(*s.body);
    if (s.else_body) stmt(*s.else_body);
    for (auto& c : s.stmts) stmt(*c);
    if (s.kind == StmtKind::Return) {
      s.kind = StmtKind::ResultWrite;
      s.type = return_type;
    }
  }

  void expr(ExprPtr& e) {
    if (e->kind == ExprKind::Index && e->kids[0]->kind == ExprKind::Index) {
      Expr& row = *e->kids[0];
      auto it = row.kids[0]->kind == ExprKind::Var ? flat.find(row.kids[0]->slot) : flat.end();
      if (it != flat.end()) {
        ExprPtr a = std::move(row.kids[1]);
        ExprPtr b = std::move(e->kids[1]);
        expr(a);
        expr(b);
        auto base = typed_var(row.kids[0]->name, row.kids[0]->slot, Type{row.kids[0]->type.base, 1});
        auto idx = int_op(Op::Add, int_op(Op::Mul, std::move(a), typed_var(it->second.name + "_cols", it->second.cols_slot, kInt)),
                          std::move(b));
        e->kids.clear();
        e->kids.push_back(std::move(base));
        e->kids.push_back(std::move(idx));
        return;
      }
    }
    if (e->kind == ExprKind::Length) {
      Expr& k = *e->kids[0];
      if (k.kind == ExprKind::Var) {
        auto it = flat.find(k.slot);
        if (it != flat.end()) {
          e = typed_var(it->second.name + "_rows", it->second.rows_slot, kInt);
          return;
        }
      } else if (k.kind == ExprKind::Index && k.kids[0]->kind == ExprKind::Var) {
        auto it = flat.find(k.kids[0]->slot);
        if (it != flat.end()) {
          e = typed_var(it->second.name + "_cols", it->second.cols_slot, kInt);
          return;
        }
      }
    }
    for (auto& k : e->kids) expr(k);
    if (e->kind == ExprKind::Var && acc >= 0 && e->slot == acc) {
      e->slot = part;
      e->name = part_name;
      e->type = part_type;
    }
  }
};

class GpuPlanner {
 public:
  GpuPlanner(const Program& p, int idx, const std::vector<const DistSpec*>* specs, int depth)
      : p_(p), idx_(idx), specs_(specs), depth_(depth) {}

  ExecutionPlanGPU run() {
    const MethodDecl& src = p_.methods.at(static_cast<std::size_t>(idx_));
    if (depth_ > 16)
      throw CompileError({Diagnostic{DiagCode::PlanError, Severity::Error, src.loc,
                                     "intermediate reductions nest too deeply"}});
    m_ = std::make_shared<MethodDecl>(src.clone());
    if (specs_)
      for (std::size_t k = 0; k < m_->params.size() && k < specs_->size(); ++k)
        if ((*specs_)[k] && !m_->params[k].dist) m_->params[k].dist = (*specs_)[k]->clone();
    info_ = analyze_method(*m_);
    for (auto& prm : m_->params)
      if (const DistValue* d = info_.dist_for_slot(prm.slot)) prm.written = d->written;
    next_slot_ = m_->num_slots;

    plan_.program = &p_;
    plan_.method_index = idx_;
    plan_.reduce = m_->effective_reduce();

    for (const auto& d : info_.dists)
      if (d.spec->strategy == DistStrategy::User)
        warn(DiagCode::GpuStrategyIgnored, d.spec->loc,
             "partitioning strategy '" + d.spec->user_name + "' of '" + d.name + "' is ignored on the GPU");

    if (m_->is_somd) lower_aux_calls();

    if (!m_->is_somd && scalar_candidate()) {
      build_scalar_kernel();
    } else {
      std::vector<std::string> loops;
      walk(m_->body, loops);
    }
    plan_transfers();
    plan_.host = m_;
    return std::move(plan_);
  }

 private:
  const Program& p_;
  int idx_;
  const std::vector<const DistSpec*>* specs_;
  int depth_;
  std::shared_ptr<MethodDecl> m_;
  MethodInfo info_;
  ExecutionPlanGPU plan_;
  int next_slot_ = 0;

  void warn(DiagCode c, SourceLoc loc, std::string msg) {
    plan_.warnings.push_back(Diagnostic{c, Severity::Warning, loc, std::move(msg)});
  }

  int new_slot() { return next_slot_++; }

  // Calls to reduce-carrying SOMD methods become AuxCall nodes backed by nested plans that
  // inherit the distribution of the arguments.
  void lower_aux_calls() {
    std::function<void(ExprPtr&)> fix = [&](ExprPtr& e) {
      for (auto& k : e->kids) fix(k);
      if (e->kind != ExprKind::Call) return;
      const MethodDecl& callee = p_.methods[static_cast<std::size_t>(e->method_index)];
      if (!callee.is_somd) return;
      std::vector<const DistSpec*> specs(callee.params.size(), nullptr);
      for (std::size_t k = 0; k < e->kids.size() && k < specs.size(); ++k) {
        const Expr& a = *e->kids[k];
        if (a.kind != ExprKind::Var) continue;
        if (const DistValue* d = info_.dist_for_slot(a.slot)) specs[k] = d->spec;
      }
      auto sub = std::make_shared<ExecutionPlanGPU>(plan_gpu(p_, e->method_index, &specs, depth_ + 1));
      for (const auto& w : sub->warnings) plan_.warnings.push_back(w);
      e->kind = ExprKind::AuxCall;
      e->aux_id = static_cast<int>(plan_.aux.size());
      plan_.aux.push_back(std::move(sub));
    };
    std::function<void(Stmt&)> walk = [&](Stmt& s) {
      if (s.expr) fix(s.expr);
      if (s.step) fix(s.step);
      if (s.init) walk(*s.init);
      if (s.body) walk(*s.body);
      if (s.else_body) walk(*s.else_body);
      for (auto& c : s.stmts) walk(*c);
    };
    walk(*m_->body);
  }

  bool scalar_candidate() const {
    if (!m_->return_type.is_scalar() && m_->return_type.base != BaseType::Void) return false;
    bool ok = true;
    for_each_stmt(*m_->body, [&](const Stmt& s) {
      if (s.kind == StmtKind::Sync) ok = false;
    });
    for_each_expr(*m_->body, [&](const Expr& e) {
      if (e.kind == ExprKind::Call && p_.methods[static_cast<std::size_t>(e.method_index)].is_somd) ok = false;
    });
    return ok;
  }

  void add_buffers(KernelIR& k, const Scan& scan, KernelRewriter& rw) {
    for (const auto& [slot, written] : scan.arrays) {
      KernelBuffer b;
      b.name = m_->slot_names[static_cast<std::size_t>(slot)];
      b.slot = slot;
      b.type = m_->slot_types[static_cast<std::size_t>(slot)];
      b.written = written;
      b.read = true;
      if (b.type.rank == 2) {
        b.rows_slot = new_slot();
        b.cols_slot = new_slot();
        rw.flat[slot] = KernelRewriter::Flat{b.name, b.rows_slot, b.cols_slot};
      }
      k.buffers.push_back(std::move(b));
    }
    for (int slot : scan.scalars) {
      if (slot == scan.acc) continue;
      k.scalars.push_back(KernelScalar{m_->slot_names[static_cast<std::size_t>(slot)], slot,
                                       m_->slot_types[static_cast<std::size_t>(slot)]});
    }
  }

  void build_scalar_kernel() {
    Scanner sc(p_, *m_, {}, true);
    Scan scan = sc.run(*m_->body);
    if (!scan.why.empty()) {
      warn(DiagCode::GpuUnsupported, m_->loc, "'" + m_->name + "' runs on the host: " + scan.why);
      return;
    }
    KernelIR k;
    k.id = 0;
    k.origin = "body of " + m_->name;
    k.dims = 0;
    k.gid_slot = new_slot();
    KernelRewriter rw;
    rw.return_type = m_->return_type;
    add_buffers(k, scan, rw);
    auto body = m_->body->clone();
    rw.stmt(*body);
    auto guard = std::make_unique<Stmt>();
    guard->kind = StmtKind::If;
    guard->loc = m_->body->loc;
    guard->expr = int_op(Op::Eq, typed_var("gid", k.gid_slot, kInt), make_int(0));
    guard->body = std::move(body);
    std::vector<StmtPtr> stmts;
    stmts.push_back(std::move(guard));
    k.body = make_block(std::move(stmts), m_->body->loc);
    k.frame_size = next_slot_;
    plan_.scalar_kernel = true;
    plan_.kernels.push_back(std::move(k));
    plan_.schedule.push_back("launched once per invocation");
  }

  void walk(StmtPtr& s, std::vector<std::string>& loops) {
    switch (s->kind) {
      case StmtKind::For: {
        if (info_.binding(s.get())) {
          std::string why = try_kernel(s, loops);
          if (!why.empty())
            warn(DiagCode::GpuUnsupported, s->loc, "loop runs on the host: " + why);
          return;
        }
        loops.push_back("for (" + (s->expr ? print_expr(*s->expr) : std::string(";;")) + ")");
        walk(s->body, loops);
        loops.pop_back();
        return;
      }
      case StmtKind::While:
        loops.push_back("while (" + print_expr(*s->expr) + ")");
        walk(s->body, loops);
        loops.pop_back();
        return;
      case StmtKind::Block:
        for (auto& c : s->stmts) walk(c, loops);
        return;
      case StmtKind::If:
        walk(s->body, loops);
        if (s->else_body) walk(s->else_body, loops);
        return;
      case StmtKind::Sync:
        walk(s->body, loops);
        return;
      default:
        return;
    }
  }

  static const Stmt* only_stmt(const Stmt& s) {
    const Stmt* x = &s;
    while (x->kind == StmtKind::Block && x->stmts.size() == 1) x = x->stmts[0].get();
    return x;
  }

  ExprPtr extent_expr(const LoopBinding& b) const {
    const DistValue& d = info_.dists[static_cast<std::size_t>(b.dist_id)];
    auto v = typed_var(d.name, d.slot, d.type);
    if (b.dim == 1) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Length;
      e->type = kInt;
      e->kids.push_back(std::move(v));
      return e;
    }
    auto row = std::make_unique<Expr>();
    row->kind = ExprKind::Index;
    row->type = Type{d.type.base, 1};
    row->kids.push_back(std::move(v));
    row->kids.push_back(make_int(0));
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Length;
    e->type = kInt;
    e->kids.push_back(std::move(row));
    return e;
  }

  std::string try_kernel(StmtPtr& loop, const std::vector<std::string>& loops) {
    auto f1 = loop_form(*loop);
    if (!f1) return "loop is not in canonical form";
    const LoopBinding& b1 = *info_.binding(loop.get());

    // A rectangular nest of two distributed loops becomes one 2D grid.
    const Stmt* inner = only_stmt(*loop->body);
    std::optional<LoopForm> f2;
    const LoopBinding* b2 = nullptr;
    if (inner->kind == StmtKind::For && info_.binding(inner)) {
      f2 = loop_form(*inner);
      if (f2 && (refs_slot(*f2->lower, f1->slot) || refs_slot(*f2->upper, f1->slot))) f2.reset();
      if (f2) b2 = info_.binding(inner);
    }
    const Stmt& body = f2 ? *inner->body : *loop->body;
    std::vector<int> ind{f1->slot};
    if (f2) ind.push_back(f2->slot);

    Scanner sc(p_, *m_, ind, false);
    std::vector<const Expr*> bounds{f1->lower, f1->upper};
    if (f2) {
      bounds.push_back(f2->lower);
      bounds.push_back(f2->upper);
    }
    Scan scan = sc.run(body, bounds);
    if (!scan.why.empty()) return scan.why;

    KernelIR k;
    k.id = static_cast<int>(plan_.kernels.size());
    k.dims = f2 ? 2 : 1;
    k.origin = "loop at " + loc_text(loop->loc) + (f2 ? " with the loop at " + loc_text(inner->loc) : "");
    k.gid_slot = new_slot();
    if (f2) k.width_slot = new_slot();
    KernelRewriter rw;
    rw.return_type = m_->return_type;
    add_buffers(k, scan, rw);
    for (int s : ind) {
      auto it = std::find_if(k.scalars.begin(), k.scalars.end(), [&](const KernelScalar& x) { return x.slot == s; });
      if (it != k.scalars.end()) k.scalars.erase(it);
    }

    if (scan.acc >= 0) {
      GroupReduce g;
      g.op = scan.acc_op;
      g.acc_slot = scan.acc;
      g.acc_name = m_->slot_names[static_cast<std::size_t>(scan.acc)];
      g.type = m_->slot_types[static_cast<std::size_t>(scan.acc)];
      g.part_slot = new_slot();
      const auto& r = plan_.reduce;
      if (r && r->kind == ReduceKind::PrimOp) {
        Op rop = r->op == Op::Mul ? Op::Mul : Op::Add;
        g.merged = rop == g.op;
      }
      g.self = r && r->kind == ReduceKind::Self && g.type == m_->return_type && g.op == Op::Add;
      rw.acc = scan.acc;
      rw.part = g.part_slot;
      rw.part_name = g.acc_name + "_part";
      rw.part_type = g.type;
      k.reduce = g;
    }

    // Thread program: indices from the global id, the loop guards, then the body.
    std::vector<StmtPtr> stmts;
    auto gid = [&] { return typed_var("gid", k.gid_slot, kInt); };
    const std::string i_name = m_->slot_names[static_cast<std::size_t>(f1->slot)];
    if (f2) {
      const std::string j_name = m_->slot_names[static_cast<std::size_t>(f2->slot)];
      stmts.push_back(int_decl(i_name, f1->slot, int_op(Op::Div, gid(), typed_var("W", k.width_slot, kInt)), loop->loc));
      stmts.push_back(int_decl(j_name, f2->slot, int_op(Op::Mod, gid(), typed_var("W", k.width_slot, kInt)), inner->loc));
    } else {
      stmts.push_back(int_decl(i_name, f1->slot, gid(), loop->loc));
    }
    if (k.reduce) {
      auto d = std::make_unique<Stmt>();
      d->kind = StmtKind::VarDecl;
      d->type = k.reduce->type;
      d->name = rw.part_name;
      d->slot = k.reduce->part_slot;
      d->loc = loop->loc;
      d->expr = k.reduce->op == Op::Mul ? make_int(1) : make_int(0);
      d->expr->type = kInt;
      stmts.push_back(std::move(d));
    }
    auto guard_for = [&](const LoopForm& f, const std::string& n) {
      auto lo = f.lower->clone();
      auto hi = f.upper->clone();
      rw.expr(lo);
      rw.expr(hi);
      return int_op(Op::And, int_op(Op::Ge, typed_var(n, f.slot, kInt), std::move(lo)),
                    int_op(Op::Lt, typed_var(n, f.slot, kInt), std::move(hi)));
    };
    auto work = body.clone();
    rw.stmt(*work);
    StmtPtr guarded = std::move(work);
    if (f2) {
      auto g2 = std::make_unique<Stmt>();
      g2->kind = StmtKind::If;
      g2->loc = inner->loc;
      g2->expr = guard_for(*f2, m_->slot_names[static_cast<std::size_t>(f2->slot)]);
      g2->body = std::move(guarded);
      guarded = std::move(g2);
    }
    auto g1 = std::make_unique<Stmt>();
    g1->kind = StmtKind::If;
    g1->loc = loop->loc;
    g1->expr = guard_for(*f1, i_name);
    g1->body = std::move(guarded);
    stmts.push_back(std::move(g1));
    k.body = make_block(std::move(stmts), loop->loc);

    k.span.emplace_back(extent_expr(b1), f1->upper->clone());
    if (f2) k.span.emplace_back(extent_expr(*b2), f2->upper->clone());
    k.frame_size = 0;  // fixed up once all kernels exist

    plan_.schedule.push_back(loops.empty() ? "launched once per invocation"
                                           : "launched once per iteration of " + join(loops));
    auto launch = std::make_unique<Stmt>();
    launch->kind = StmtKind::Launch;
    launch->kernel_id = k.id;
    launch->loc = loop->loc;
    plan_.kernels.push_back(std::move(k));
    loop = std::move(launch);
    for (auto& kk : plan_.kernels) kk.frame_size = next_slot_;
    return {};
  }

  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " / " : "") + v[k];
    return s;
  }

  bool fresh_local(int slot) const {
    bool fresh = false;
    for_each_stmt(*m_->body, [&](const Stmt& s) {
      if (s.kind == StmtKind::VarDecl && s.slot == slot && s.expr && s.expr->kind == ExprKind::NewArray) fresh = true;
    });
    return fresh;
  }

  void plan_transfers() {
    std::set<std::string> seen;
    std::set<int> written;
    for (const auto& k : plan_.kernels) {
      for (const auto& b : k.buffers) {
        if (b.written) written.insert(b.slot);
        if (!seen.insert(b.name).second) continue;
        plan_.transfers.push_back(
            TransferStep{fresh_local(b.slot) ? TransferStep::Kind::Alloc : TransferStep::Kind::Put, b.name, k.id});
      }
      if (k.reduce)
        plan_.transfers.push_back(TransferStep{TransferStep::Kind::Get, "partials_K" + std::to_string(k.id), k.id});
    }
    if (plan_.scalar_kernel && m_->return_type.base != BaseType::Void)
      plan_.transfers.push_back(TransferStep{TransferStep::Kind::Get, "results", 0});
    for_each_stmt(*m_->body, [&](const Stmt& s) {
      if (s.kind == StmtKind::Return && s.expr && s.expr->kind == ExprKind::Var && written.count(s.expr->slot))
        plan_.transfers.push_back(TransferStep{TransferStep::Kind::Get, s.expr->name, -1});
    });
  }
};

std::string op_text(Op op) { return op == Op::Mul ? "*" : "+"; }

void print_one(std::ostringstream& os, const ExecutionPlanGPU& plan, std::int64_t max_group) {
  const MethodDecl& m = plan.method();
  PrintNames names;
  names.kernel = [&](int id) { return "K" + std::to_string(id); };
  names.aux = [&](int id) { return plan.aux[static_cast<std::size_t>(id)]->method().name; };

  if (plan.scalar_kernel) {
    os << "// host\n";
    os << "launch K0 <<<1 group of " << max_group << ">>>;\n";
    if (m.return_type.base != BaseType::Void) os << "get results; return results[0];\n";
  } else {
    os << "// host\n" << print_method(m, names);
  }
  for (const auto& k : plan.kernels) {
    os << "\n// kernel K" << k.id << ": " << k.origin << "; " << plan.schedule[static_cast<std::size_t>(k.id)] << "\n";
    os << "// threads = numberOfThreads(";
    if (k.dims == 0) os << "1";
    for (std::size_t d = 0; d < k.span.size(); ++d) {
      if (d) os << " * ";
      const auto& [ext, up] = k.span[d];
      os << (ext ? print_expr(*ext) : print_expr(*up));
    }
    os << "), groups of " << max_group << "\n";
    os << "kernel K" << k.id << "(";
    bool first = true;
    auto param = [&](const std::string& s) {
      os << (first ? "" : ", ") << s;
      first = false;
    };
    for (const auto& b : k.buffers) {
      param(to_string(Type{b.type.base, 1}) + " " + b.name);
      if (b.type.rank == 2) {
        param("int " + b.name + "_rows");
        param("int " + b.name + "_cols");
      }
    }
    for (const auto& s : k.scalars) param(to_string(s.type) + " " + s.name);
    if (k.width_slot >= 0) param("int W");
    if (k.reduce) param(to_string(Type{k.reduce->type.base, 1}) + " partials_K" + std::to_string(k.id));
    os << ") {\n";
    os << "  int gid = getGlobalId();\n";
    for (const auto& s : k.body->stmts) os << print_stmt(*s, 1, names);
    if (k.reduce)
      os << "  partials_K" << k.id << "[getGroupId()] = groupReduce(" << op_text(k.reduce->op) << ", "
         << k.reduce->acc_name << "_part);\n";
    os << "}\n";
    if (k.reduce) {
      const auto& g = *k.reduce;
      os << "// host after K" << k.id << ": " << g.acc_name << " = " << g.acc_name << " " << op_text(g.op) << " ";
      if (g.self)
        os << m.name << "(partials_K" << k.id << ");  // reduce(self) over the group partials\n";
      else
        os << "fold(" << op_text(g.op) << ", partials_K" << k.id << ");"
           << (g.merged ? "  // merged with reduce(" + op_text(g.op) + ")" : std::string()) << "\n";
    }
  }
  if (!plan.transfers.empty()) {
    os << "\n// transfers:";
    for (const auto& t : plan.transfers) {
      switch (t.kind) {
        case TransferStep::Kind::Put:
          os << " put " << t.buffer << " before K" << t.kernel << ";";
          break;
        case TransferStep::Kind::Alloc:
          os << " alloc " << t.buffer << " before K" << t.kernel << ";";
          break;
        case TransferStep::Kind::Get:
          if (t.kernel >= 0)
            os << " get " << t.buffer << " after K" << t.kernel << ";";
          else
            os << " get " << t.buffer << " on return;";
          break;
      }
    }
    os << "\n";
  }
  for (const auto& a : plan.aux) {
    os << "\n// auxiliary " << a->method().name << " (reduce " << to_string(*a->reduce) << ")\n";
    print_one(os, *a, max_group);
  }
}

}  // namespace

ExecutionPlanGPU plan_gpu(const Program& p, int method_index, const std::vector<const DistSpec*>* param_specs,
                          int depth) {
  return GpuPlanner(p, method_index, param_specs, depth).run();
}

std::string print_kernels(const ExecutionPlanGPU& plan, std::int64_t max_group) {
  std::ostringstream os;
  print_one(os, plan, max_group);
  return os.str();
}

}  // namespace somd
