#include "somd/plan_sm.hpp"

#include <set>
#include <sstream>

#include "somd/diagnostics.hpp"
#include "somd/partition.hpp"
#include "somd/printer.hpp"

namespace somd {

bool PartitionCall::partitions(int d) const {
  for (int x : dims)
    if (x == d) return true;
  return false;
}

namespace {

[[noreturn]] void plan_error(SourceLoc loc, const std::string& msg) {
  throw CompileError({Diagnostic{DiagCode::PlanError, Severity::Error, loc, msg}});
}

ExprPtr range_bound(int dist_id, int dim, bool upper, SourceLoc loc) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::RangeBound;
  e->dist_id = dist_id;
  e->dim = dim;
  e->upper = upper;
  e->loc = loc;
  e->type = Type{BaseType::Int, 0};
  return e;
}

ExprPtr math2(const char* fn, ExprPtr a, ExprPtr b, SourceLoc loc) {
  auto e = make_math(fn, std::move(a), std::move(b), loc);
  e->type = Type{BaseType::Int, 0};
  return e;
}

class SlaveRewriter {
 public:
  explicit SlaveRewriter(const SlaveEnv& env) : env_(env) {}

  ExprPtr expr(const Expr& e) {
    auto out = e.clone();
    rewrite_calls(*out, e);
    return out;
  }

  StmtPtr stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::Return: {
        auto w = std::make_unique<Stmt>();
        w->kind = StmtKind::ResultWrite;
        w->loc = s.loc;
        w->type = env_.return_type;
        if (s.expr) w->expr = expr(*s.expr);
        return w;
      }
      case StmtKind::Sync: {
        std::vector<StmtPtr> parts;
        parts.push_back(stmt(*s.body));
        auto tail = std::make_unique<Stmt>();
        tail->loc = s.loc;
        if (s.reduce) {
          tail->kind = StmtKind::SyncCombine;
          tail->target = s.target;
          tail->target_slot = s.target_slot;
          tail->reduce = s.reduce->clone();
        } else {
          tail->kind = StmtKind::FenceWait;
        }
        parts.push_back(std::move(tail));
        return make_block(std::move(parts), s.loc);
      }
      case StmtKind::VarDecl:
        if (s.shared || s.dist) {
          auto e = std::make_unique<Stmt>();
          e->kind = StmtKind::Empty;
          e->loc = s.loc;
          return e;
        }
        break;
      case StmtKind::For:
        if (const LoopBinding* b = env_.info->binding(&s)) return loop(s, *b);
        break;
      default:
        break;
    }
    auto out = std::make_unique<Stmt>();
    out->kind = s.kind;
    out->loc = s.loc;
    out->type = s.type;
    out->name = s.name;
    out->slot = s.slot;
    out->shared = s.shared;
    if (s.dist) out->dist = s.dist->clone();
    if (s.expr) out->expr = expr(*s.expr);
    if (s.init) out->init = stmt(*s.init);
    if (s.step) out->step = expr(*s.step);
    if (s.body) out->body = stmt(*s.body);
    if (s.else_body) out->else_body = stmt(*s.else_body);
    for (const auto& c : s.stmts) out->stmts.push_back(stmt(*c));
    out->target = s.target;
    out->target_slot = s.target_slot;
    if (s.reduce) out->reduce = s.reduce->clone();
    out->loop_rank = s.loop_rank;
    out->induction = s.induction;
    out->induction_slot = s.induction_slot;
    out->kernel_id = s.kernel_id;
    return out;
  }

 private:
  const SlaveEnv& env_;

  void rewrite_calls(Expr& out, const Expr& orig) {
    if (orig.kind == ExprKind::Call) {
      auto it = env_.aux_ids.find(&orig);
      if (it != env_.aux_ids.end()) {
        out.kind = ExprKind::AuxCall;
        out.aux_id = it->second;
      }
    }
    for (std::size_t k = 0; k < orig.kids.size(); ++k)
      if (orig.kids[k]) rewrite_calls(*out.kids[k], *orig.kids[k]);
  }

  StmtPtr loop(const Stmt& s, const LoopBinding& b) {
    auto out = stmt_copy_without_binding(s);
    auto form = loop_form(s);
    ExprPtr lo = range_bound(b.dist_id, b.dim, false, s.loc);
    ExprPtr hi = range_bound(b.dist_id, b.dim, true, s.loc);
    if (!b.full_extent) {
      lo = math2("max", expr(*form->lower), std::move(lo), s.loc);
      hi = math2("min", expr(*form->upper), std::move(hi), s.loc);
    }
    if (out->init->kind == StmtKind::VarDecl)
      out->init->expr = std::move(lo);
    else
      out->init->expr->kids[1] = std::move(lo);
    out->expr->kids[1] = std::move(hi);
    return out;
  }

  StmtPtr stmt_copy_without_binding(const Stmt& s) {
    auto out = std::make_unique<Stmt>();
    out->kind = StmtKind::For;
    out->loc = s.loc;
    out->init = stmt(*s.init);
    out->expr = expr(*s.expr);
    out->step = expr(*s.step);
    out->body = stmt(*s.body);
    out->loop_rank = s.loop_rank;
    out->induction = s.induction;
    out->induction_slot = s.induction_slot;
    return out;
  }
};

bool uses_barriers(const Stmt& body) {
  bool found = false;
  for_each_stmt(body, [&](const Stmt& s) {
    if (s.kind == StmtKind::FenceWait || s.kind == StmtKind::SyncCombine) found = true;
  });
  for_each_expr(body, [&](const Expr& e) {
    if (e.kind == ExprKind::AuxCall) found = true;
  });
  return found;
}

}  // namespace

StmtPtr transform_slave(const Stmt& body, const SlaveEnv& env) {
  SlaveRewriter rw(env);
  return rw.stmt(body);
}

std::shared_ptr<SlaveProgram> lower_slave(const Program& p, int method_index,
                                          const std::vector<const DistSpec*>* param_specs, int depth) {
  const MethodDecl& src = p.methods.at(static_cast<std::size_t>(method_index));
  if (depth > 16) plan_error(src.loc, "intermediate reductions nest too deeply (recursive reduce method?)");
  auto sp = std::make_shared<SlaveProgram>();
  auto m = std::make_shared<MethodDecl>(src.clone());
  if (param_specs)
    for (std::size_t k = 0; k < m->params.size() && k < param_specs->size(); ++k)
      if ((*param_specs)[k] && !m->params[k].dist) m->params[k].dist = (*param_specs)[k]->clone();
  sp->method = m;
  sp->method_index = method_index;
  sp->info = analyze_method(*m);
  const MethodInfo& info = sp->info;
  for (auto& prm : m->params)
    if (const DistValue* d = info.dist_for_slot(prm.slot)) prm.written = d->written;

  for (const auto& d : info.dists) {
    PartitionCall pc;
    pc.dist_id = d.id;
    pc.name = d.name;
    pc.slot = d.slot;
    pc.param_index = d.param_index;
    pc.type = d.type;
    pc.spec = d.spec;
    pc.written = d.written;
    pc.decl = d.decl;
    if (d.spec->strategy == DistStrategy::User) {
      pc.dims = {1};
    } else {
      for (int k = 1; k <= d.type.rank; ++k)
        if (d.spec->partitions(k, d.type.rank)) pc.dims.push_back(k);
    }
    if (param_specs && d.param_index < 0)
      plan_error(d.decl->loc, "distributed local '" + d.name + "' inside an intermediate reduction");
    if (param_specs && !(*param_specs)[static_cast<std::size_t>(d.param_index)])
      plan_error(m->loc, "parameter '" + d.name + "' of '" + m->name +
                             "' is distributed but receives a value the caller does not distribute");
    sp->partitions.push_back(std::move(pc));
  }

  for (const auto& s : m->body->stmts)
    if (s->kind == StmtKind::VarDecl && s->shared)
      sp->shared.push_back(SharedSlot{s->name, s->type, s->slot, s->expr.get()});

  SlaveEnv env;
  env.info = &info;
  env.return_type = m->return_type;
  for_each_expr(*m->body, [&](const Expr& e) {
    if (e.kind != ExprKind::Call) return;
    const MethodDecl& callee = p.methods[static_cast<std::size_t>(e.method_index)];
    if (!callee.is_somd) return;
    AuxSite site;
    site.aux_id = static_cast<int>(sp->aux.size());
    site.method_index = e.method_index;
    std::vector<const DistSpec*> specs(callee.params.size(), nullptr);
    site.arg_dist.assign(callee.params.size(), -1);
    for (std::size_t k = 0; k < e.kids.size() && k < specs.size(); ++k) {
      const Expr& a = *e.kids[k];
      if (a.kind != ExprKind::Var) continue;
      if (const DistValue* d = info.dist_for_slot(a.slot)) {
        specs[k] = d->spec;
        site.arg_dist[k] = d->id;
      }
    }
    site.callee = lower_slave(p, e.method_index, &specs, depth + 1);
    env.aux_ids[&e] = site.aux_id;
    sp->aux.push_back(std::move(site));
  });

  sp->body = transform_slave(*m->body, env);
  sp->reduce = m->effective_reduce();
  sp->barriers = uses_barriers(*sp->body);
  if (!sp->aux.empty()) sp->barriers = true;
  return sp;
}

ExecutionPlanSM lower_master_sm(const Program& p, int method_index, int n_slaves) {
  if (n_slaves < 1) plan_error({}, "n_slaves must be positive");
  const MethodDecl& m = p.methods.at(static_cast<std::size_t>(method_index));
  if (!m.is_somd) plan_error(m.loc, "'" + m.name + "' is not a SOMD method");
  ExecutionPlanSM plan;
  plan.program = &p;
  plan.n_slaves = n_slaves;
  plan.slave = lower_slave(p, method_index);
  const SlaveProgram& sp = *plan.slave;
  if (sp.reduce && sp.reduce->kind == ReduceKind::ArrayAssembly) {
    bool ok = false;
    for (const auto& pc : sp.partitions)
      if (pc.type.rank == m.return_type.rank) ok = true;
    if (!ok)
      plan_error(m.loc, "'" + m.name + "' returns an array but has no distributed value of the same rank to assemble it by");
  }
  return plan;
}

namespace {

std::string length_text(const PartitionCall& pc, int dim) {
  if (pc.decl) return print_expr(*pc.decl->expr->kids[static_cast<std::size_t>(dim - 1)]);
  return dim == 1 ? pc.name + ".length" : pc.name + "[0].length";
}

std::string view_text(const PartitionCall& pc, int dim) {
  ViewPair v = pc.spec->halo(dim);
  return "{" + std::to_string(v.before) + "," + std::to_string(v.after) + "}";
}

}  // namespace

std::string print_plan(const ExecutionPlanSM& plan) {
  const SlaveProgram& sp = *plan.slave;
  const MethodDecl& m = *sp.method;
  const int n = plan.n_slaves;
  std::ostringstream os;

  std::string params;
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    if (k) params += ", ";
    params += to_string(m.params[k].type) + " " + m.params[k].name;
  }
  std::string rtype = m.return_type.base == BaseType::Void ? "void" : to_string(m.return_type);
  os << "// master\n";
  os << rtype << " " << m.name << "(" << params << ") {\n";
  os << "  int nSlaves = " << n << ";\n";
  os << "  Phaser fence = new Phaser(nSlaves);  // parties: " << n << "\n";
  os << "  Phaser completed = new Phaser(nSlaves + 1);  // parties: " << n + 1 << "\n";
  if (m.return_type.base != BaseType::Void) {
    std::string dims;
    for (int r = 0; r < m.return_type.rank; ++r) dims += "[]";
    os << "  " << to_string(Type{m.return_type.base, m.return_type.rank + 1}) << " results = new "
       << to_string(Type{m.return_type.base, 0}) << "[nSlaves]" << dims << ";\n";
  }

  std::vector<std::string> spawn_ranges;
  for (const auto& pc : sp.partitions) {
    if (pc.decl) os << "  " << to_string(pc.type) << " " << pc.name << " = " << print_expr(*pc.decl->expr) << ";\n";
    GridShape g{1, n};
    bool block2 = pc.type.rank == 2 && pc.dims.size() == 2;
    if (block2) g = factor_grid(n);
    for (int dim : pc.dims) {
      std::string var = pc.name + "_" + std::to_string(dim);
      os << "  int[][] " << var << " = ";
      if (pc.spec->strategy == DistStrategy::User) {
        os << pc.spec->user_name << "(" << length_text(pc, dim) << ", nSlaves";
        for (const auto& a : pc.spec->user_args) os << ", " << print_expr(*a);
        os << ");\n";
        spawn_ranges.push_back(var + "[rank]");
        continue;
      }
      std::string count = "nSlaves";
      std::string pick = var + "[rank]";
      if (block2) {
        count = std::to_string(dim == 1 ? g.rows : g.cols);
        pick = dim == 1 ? var + "[rank / " + std::to_string(g.cols) + "]"
                        : var + "[rank % " + std::to_string(g.cols) + "]";
      }
      os << "IndexPartitioner(" << length_text(pc, dim) << ", " << count << ", " << view_text(pc, dim) << ");\n";
      spawn_ranges.push_back(pick);
    }
  }
  for (const auto& s : sp.shared)
    os << "  " << to_string(s.type) << " " << s.name << " = " << (s.init ? print_expr(*s.init) : "0")
       << ";  // shared, one copy per MI\n";

  os << "  for (int rank = 0; rank < nSlaves; rank++)\n";
  os << "    spawn(new " << m.name << "_Slave(";
  for (const auto& prm : m.params) os << prm.name << ", ";
  for (const auto& r : spawn_ranges) os << r << ", ";
  os << "fence, completed, results, rank));\n";
  os << "  completed.advanceAndWait();\n";
  if (m.return_type.base != BaseType::Void) {
    os << "  " << rtype << " result = ";
    if (sp.reduce) {
      switch (sp.reduce->kind) {
        case ReduceKind::PrimOp: os << "Reductions.fold(" << op_symbol(sp.reduce->op) << ", results)"; break;
        case ReduceKind::ArrayAssembly: os << "Reductions.assemble(results)"; break;
        case ReduceKind::Self: os << m.name << "(results)"; break;
        case ReduceKind::User: {
          os << sp.reduce->user_name << "(results";
          for (const auto& a : sp.reduce->user_args) os << ", " << print_expr(*a);
          os << ")";
          break;
        }
      }
    } else {
      os << "results[0]";
    }
    os << ";\n  return result;\n";
  }
  os << "}\n";

  PrintNames names;
  names.range = [&](int dist_id, int dim) {
    return sp.info.dists[static_cast<std::size_t>(dist_id)].name + "_" + std::to_string(dim);
  };
  names.aux = [&](int aux_id) {
    return plan.program->methods[static_cast<std::size_t>(sp.aux[static_cast<std::size_t>(aux_id)].method_index)].name +
           "_reduceAll";
  };
  os << "\n// slave (one per rank)\n";
  os << "void " << m.name << "_Slave.call() ";
  os << print_stmt(*sp.body, 0, names);
  for (const auto& a : sp.aux) {
    const SlaveProgram& c = *a.callee;
    PrintNames cn;
    cn.range = [&](int dist_id, int dim) {
      int caller = a.arg_dist[static_cast<std::size_t>(c.info.dists[static_cast<std::size_t>(dist_id)].param_index)];
      return sp.info.dists[static_cast<std::size_t>(caller)].name + "_" + std::to_string(dim);
    };
    os << "\n// intermediate reduction " << c.method->name << ": local part, then reduceAll("
       << (c.reduce ? to_string(*c.reduce) : std::string("?")) << ")\n";
    os << to_string(c.method->return_type) << " " << c.method->name << "_local() ";
    os << print_stmt(*c.body, 0, cn);
  }
  return os.str();
}

}  // namespace somd
