#include "somd/runtime_sm.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "somd/diagnostics.hpp"
#include "somd/interp.hpp"
#include "somd/phaser.hpp"

namespace somd {

namespace {

ThreadPool& pool_for(int workers) {
  if (workers <= 0) return ThreadPool::shared();
  static std::mutex mu;
  static std::map<int, std::unique_ptr<ThreadPool>> pools;
  std::lock_guard lk(mu);
  auto& p = pools[workers];
  if (!p) p = std::make_unique<ThreadPool>(workers);
  return *p;
}

IndexRange full_range(std::int64_t len) { return IndexRange{0, len, 0, len}; }

struct DistState {
  const PartitionCall* pc = nullptr;
  Value value;
  std::int64_t len1 = 0;
  std::int64_t len2 = -1;
  std::vector<IndexRange> r1;  // per rank
  std::vector<IndexRange> r2;  // per rank, rank-2 values only

  bool empty_for(int rank) const {
    if (r1[static_cast<std::size_t>(rank)].empty()) return true;
    return !r2.empty() && r2[static_cast<std::size_t>(rank)].empty();
  }
};

class Invocation;

class MiHooks : public ExecHooks {
 public:
  MiHooks(Invocation& inv, int rank, const SlaveProgram& sp) : inv_(inv), rank_(rank), sp_(sp) {}

  std::int64_t range_bound(int dist_id, int dim, bool upper) override;
  void result_write(const Value& v) override;
  void fence_wait() override;
  Value sync_combine(const ReduceSpec& r, const Value& local) override;
  Value aux_call(int aux_id, std::vector<Value>& args, SourceLoc loc) override;
  void on_access(const Array* root, std::int64_t i, std::int64_t j, bool write, SourceLoc loc) override;

  std::vector<int> dist_map;  // slave dist id -> invocation dist index
  Value* captured = nullptr;  // set for aux callees: the local result lands here

 private:
  Invocation& inv_;
  int rank_;
  const SlaveProgram& sp_;
};

class Invocation {
 public:
  Invocation(const ExecutionPlanSM& plan, std::vector<Value> args, const SmOptions& opt)
      : plan_(plan),
        prog_(*plan.program),
        sp_(*plan.slave),
        n_(plan.n_slaves),
        opt_(opt),
        reg_(opt.registry ? *opt.registry : StrategyRegistry::defaults()),
        fence_("fence", plan.n_slaves),
        completed_("completed", plan.n_slaves + 1),
        results_(static_cast<std::size_t>(plan.n_slaves)),
        written_(static_cast<std::size_t>(plan.n_slaves), 0),
        staging_(static_cast<std::size_t>(plan.n_slaves)),
        master_ev_(*plan.program) {
    const MethodDecl& m = *sp_.method;
    if (args.size() != m.params.size())
      throw std::invalid_argument(m.name + " expects " + std::to_string(m.params.size()) + " arguments");
    master_.slots.resize(static_cast<std::size_t>(m.num_slots));
    for (std::size_t k = 0; k < args.size(); ++k) {
      const Param& p = m.params[k];
      if (!p.type.is_array()) args[k] = convert(args[k], p.type.base);
      master_.slots[static_cast<std::size_t>(p.slot)] = args[k];
    }
    args_ = std::move(args);
    if (opt_.stress_seed) {
      for (int r = 0; r < n_; ++r) rngs_.emplace_back(opt_.stress_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r));
    }
  }

  Value run(SmStats* stats) {
    prepare();
    const bool blocking = sp_.barriers;
    ThreadPool& pool = pool_for(opt_.workers);
    int granted = blocking ? pool.reserve(n_) : n_;
    std::vector<int> order(static_cast<std::size_t>(n_));
    for (int r = 0; r < n_; ++r) order[static_cast<std::size_t>(r)] = r;
    if (opt_.stress_seed) {
      std::mt19937_64 g(opt_.stress_seed);
      std::shuffle(order.begin(), order.end(), g);
    }
    TaskLatch latch(n_);
    std::vector<std::thread> extra;
    for (int k = 0; k < n_; ++k) {
      int rank = order[static_cast<std::size_t>(k)];
      auto task = [this, rank, &latch] {
        run_mi(rank);
        latch.count_down();
      };
      if (k < granted)
        pool.submit(task);
      else
        extra.emplace_back(task);
    }
    try {
      completed_.arrive_and_wait(opt_.watchdog);
    } catch (const PhaserTimeout&) {
      fail(std::make_exception_ptr(DeadlockError("watchdog: " + completed_.describe() + "; " + fence_.describe())));
    } catch (const PhaserAborted&) {
    }
    latch.wait();
    for (auto& t : extra) t.join();
    if (blocking) pool.release(granted);
    if (first_error_) std::rethrow_exception(first_error_);

    if (stats) {
      stats->fence_phases = fence_.phase();
      stats->intermediate_reductions = intermediates_;
      stats->ranges.clear();
      for (const auto& d : dists_) stats->ranges.push_back(d.r1);
    }
    return reduce();
  }

  // --- called from MIs ------------------------------------------------------------------

  const DistState& dist(int idx) const { return dists_[static_cast<std::size_t>(idx)]; }

  void write_result(int rank, const Value& v) {
    auto r = static_cast<std::size_t>(rank);
    if (written_[r]) throw std::logic_error("results cell " + std::to_string(rank) + " written twice");
    results_[r] = v;
    written_[r] = 1;
    completed_.arrive();
  }

  void fence_wait(int rank) {
    jitter(rank);
    try {
      fence_.arrive_and_wait(opt_.watchdog);
    } catch (const PhaserTimeout&) {
      throw DeadlockError("watchdog: MI " + std::to_string(rank) + " stuck at " + fence_.describe());
    }
  }

  Value intermediate(int rank, const ReduceSpec& spec, const Value& local, const ReductionEnv& env) {
    staging_[static_cast<std::size_t>(rank)] = local;
    fence_wait(rank);
    if (rank == 0) {
      try {
        broadcast_ = apply_reduction(spec, staging_, env);
        combine_error_ = nullptr;
      } catch (...) {
        combine_error_ = std::current_exception();
      }
      ++intermediates_;
    }
    fence_wait(rank);
    if (combine_error_) std::rethrow_exception(combine_error_);
    return broadcast_;
  }

  void check_access(int rank, const std::vector<int>& dist_map, const Array* root, std::int64_t i,
                    std::int64_t j, bool write, SourceLoc loc) {
    (void)dist_map;
    auto [lo, hi] = roots_.equal_range(root);
    if (lo == hi) return;
    if (j < 0 && root->rank == 2) return;  // row handle, not an element
    std::string name;
    for (auto it = lo; it != hi; ++it) {
      const DistState& d = dists_[static_cast<std::size_t>(it->second)];
      name = d.pc->name;
      auto inside = [&](const IndexRange& r, std::int64_t x) {
        return write ? (x >= r.lo && x < r.hi) : (x >= r.view_lo && x < r.view_hi);
      };
      bool ok = inside(d.r1[static_cast<std::size_t>(rank)], i);
      if (ok && j >= 0 && !d.r2.empty()) ok = inside(d.r2[static_cast<std::size_t>(rank)], j);
      if (ok) return;
    }
    std::string cell = name + "[" + std::to_string(i) + "]" + (j >= 0 ? "[" + std::to_string(j) + "]" : "");
    throw RuntimeError(loc, "MI " + std::to_string(rank) + (write ? " writes " : " reads ") + cell +
                                (write ? " outside its partition" : " outside its view"));
  }

  Frame frame_for(const SlaveProgram& sp, const std::vector<int>& dist_map, std::vector<Value>& args,
                  bool aux) {
    const MethodDecl& m = *sp.method;
    Frame f;
    f.slots.resize(static_cast<std::size_t>(m.num_slots));
    for (std::size_t k = 0; k < m.params.size() && k < args.size(); ++k) {
      const Param& p = m.params[k];
      Value& slot = f.slots[static_cast<std::size_t>(p.slot)];
      if (!p.type.is_array())
        slot = convert(args[k], p.type.base);
      else if (aux && p.written && args[k].arr)
        slot = Value::of_array(args[k].arr->deep_copy());
      else
        slot = args[k];
    }
    for (const auto& pc : sp.partitions)
      if (pc.param_index < 0 || !aux)
        f.slots[static_cast<std::size_t>(pc.slot)] = dists_[static_cast<std::size_t>(dist_map[static_cast<std::size_t>(pc.dist_id)])].value;
    return f;
  }

  void seed_shared(const SlaveProgram& sp, Evaluator& ev, Frame& f) {
    for (const auto& s : sp.shared)
      f.slots[static_cast<std::size_t>(s.slot)] =
          s.init ? convert(ev.eval(*s.init, f), s.type.base) : default_value(s.type);
  }

  /// Sequential re-invocation of `method_index` with `partials` in place of its distributed
  /// 1D parameter (reduce(self)).
  Value self_reduce(int method_index, const std::vector<Value>& args, const Value& partials) {
    const MethodDecl& m = prog_.methods[static_cast<std::size_t>(method_index)];
    std::vector<Value> a = args;
    for (std::size_t k = 0; k < m.params.size(); ++k) {
      const Param& p = m.params[k];
      if (p.type.rank == 1 && p.type.base == m.return_type.base && (p.dist || sp_.method_index != method_index)) {
        a[k] = partials;
        break;
      }
    }
    Evaluator ev(prog_);
    return ev.invoke(m, std::move(a));
  }

  const Program& program() const { return prog_; }
  const StrategyRegistry& registry() const { return reg_; }
  bool check_enabled() const { return opt_.check_access; }

  void jitter(int rank) {
    if (!opt_.stress_seed) return;
    auto& g = rngs_[static_cast<std::size_t>(rank)];
    auto x = g() % 4;
    if (x == 0) std::this_thread::yield();
    if (x == 1) std::this_thread::sleep_for(std::chrono::microseconds(g() % 50));
  }

 private:
  const ExecutionPlanSM& plan_;
  const Program& prog_;
  const SlaveProgram& sp_;
  const int n_;
  SmOptions opt_;
  const StrategyRegistry& reg_;
  std::vector<Value> args_;
  std::vector<DistState> dists_;
  std::multimap<const Array*, int> roots_;
  Phaser fence_;
  Phaser completed_;
  std::vector<Value> results_;
  std::vector<char> written_;
  std::vector<Value> staging_;
  Value broadcast_;
  std::exception_ptr combine_error_;
  int intermediates_ = 0;
  std::mutex err_mu_;
  std::exception_ptr first_error_;
  std::vector<std::mt19937_64> rngs_;
  Evaluator master_ev_;
  Frame master_;

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lk(err_mu_);
      if (!first_error_) first_error_ = e;
    }
    std::string why = "invocation aborted";
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      why = ex.what();
    } catch (...) {
    }
    fence_.abort(why);
    completed_.abort(why);
  }

  void run_mi(int rank) {
    try {
      jitter(rank);
      MiHooks hooks(*this, rank, sp_);
      hooks.watch_access = opt_.check_access;
      for (const auto& pc : sp_.partitions) hooks.dist_map.push_back(pc.dist_id);
      Evaluator ev(prog_, &hooks);
      std::vector<Value> args = args_;
      Frame f = frame_for(sp_, hooks.dist_map, args, false);
      seed_shared(sp_, ev, f);
      if (ev.exec(*sp_.body, f) != Evaluator::Flow::Halt) hooks.result_write(Value{});
    } catch (const PhaserAborted&) {
      // Another party failed first; its error is the one reported.
      std::lock_guard lk(err_mu_);
      if (!first_error_) first_error_ = std::current_exception();
    } catch (...) {
      fail(std::current_exception());
    }
  }

  std::vector<Value> eval_args(const std::vector<ExprPtr>& exprs) {
    std::vector<Value> out;
    for (const auto& e : exprs) out.push_back(master_ev_.eval(*e, master_));
    return out;
  }

  void prepare() {
    for (const auto& pc : sp_.partitions) {
      DistState d;
      d.pc = &pc;
      if (pc.param_index >= 0) {
        const Value& v = args_[static_cast<std::size_t>(pc.param_index)];
        if (!v.is_array() || !v.arr) throw RuntimeError(pc.spec->loc, "distributed argument '" + pc.name + "' is null");
        d.value = pc.written ? Value::of_array(v.arr->deep_copy()) : v;
      } else {
        d.value = master_ev_.eval(*pc.decl->expr, master_);
        master_.slots[static_cast<std::size_t>(pc.slot)] = d.value;
      }
      const Array& a = *d.value.arr;
      d.len1 = a.length();
      if (a.rank == 2) {
        d.len2 = 0;
        for (std::size_t r = 0; r < a.rows.size(); ++r) {
          std::int64_t c = a.rows[r] ? a.rows[r]->length() : -1;
          if (r == 0) d.len2 = c;
          if (c != d.len2) {
            if (pc.partitions(2))
              throw RuntimeError(pc.spec->loc, "distributed matrix '" + pc.name + "' is not rectangular");
            d.len2 = -1;
            break;
          }
        }
      }
      ViewPair v1 = pc.spec->halo(1);
      ViewPair v2 = pc.spec->halo(2);
      if (pc.spec->strategy == DistStrategy::User) {
        d.r1 = run_partitioner(reg_, pc.spec->user_name, d.len1, n_, eval_args(pc.spec->user_args));
      } else if (a.rank == 2 && pc.partitions(1) && pc.partitions(2)) {
        BlockPartition bp = block_block_partition(d.len1, d.len2, n_, v1, v2);
        for (int r = 0; r < n_; ++r) {
          d.r1.push_back(bp.row_range(r));
          d.r2.push_back(bp.col_range(r));
        }
      } else {
        d.r1 = pc.partitions(1) ? index_partition(d.len1, n_, v1)
                                : std::vector<IndexRange>(static_cast<std::size_t>(n_), full_range(d.len1));
        if (a.rank == 2)
          d.r2 = pc.partitions(2) ? index_partition(d.len2, n_, v2)
                                  : std::vector<IndexRange>(static_cast<std::size_t>(n_), full_range(std::max<std::int64_t>(d.len2, 0)));
      }
      if (a.rank == 2 && d.r2.empty())
        d.r2.assign(static_cast<std::size_t>(n_), full_range(std::max<std::int64_t>(d.len2, 0)));
      if (a.rank == 2 && d.len2 < 0) d.r2.clear();
      roots_.emplace(d.value.arr.get(), static_cast<int>(dists_.size()));
      dists_.push_back(std::move(d));
    }
  }

  bool empty_mi(int rank) const {
    if (dists_.empty()) return false;
    for (const auto& d : dists_)
      if (!d.empty_for(rank)) return false;
    return true;
  }

  Value reduce() {
    const MethodDecl& m = *sp_.method;
    if (m.return_type.base == BaseType::Void) return Value{};
    if (!sp_.reduce) return results_[0];
    const ReduceSpec& spec = *sp_.reduce;
    ReductionEnv env;
    env.registry = &reg_;
    Value out;
    switch (spec.kind) {
      case ReduceKind::PrimOp:
      case ReduceKind::Self: {
        std::vector<Value> parts;
        for (int r = 0; r < n_; ++r)
          if (!empty_mi(r)) parts.push_back(results_[static_cast<std::size_t>(r)]);
        if (parts.empty()) parts.push_back(results_[0]);
        if (spec.kind == ReduceKind::Self)
          env.self = [&](const Value& arr) { return self_reduce(sp_.method_index, args_, arr); };
        out = apply_reduction(spec, parts, env);
        break;
      }
      case ReduceKind::User:
        env.user_args = eval_args(spec.user_args);
        out = apply_reduction(spec, results_, env);
        break;
      case ReduceKind::ArrayAssembly:
        out = assemble_results();
        break;
    }
    if (m.return_type.is_scalar() && !out.is_array()) out = convert(out, m.return_type.base);
    return out;
  }

  Value assemble_results() {
    const MethodDecl& m = *sp_.method;
    const DistState* ref = nullptr;
    for (const auto& d : dists_)
      if (d.pc->type == m.return_type) {
        ref = &d;
        break;
      }
    if (!ref)
      for (const auto& d : dists_)
        if (d.pc->type.rank == m.return_type.rank) {
          ref = &d;
          break;
        }
    if (!ref) throw std::logic_error("no distributed value to assemble by");
    auto want = [&](int dim) { return dim == 1 ? ref->len1 : ref->len2; };
    std::vector<Value> parts;
    std::vector<std::int64_t> roff, coff;
    std::int64_t rows = -1, cols = -1;
    for (int r = 0; r < n_; ++r) {
      const Value& v = results_[static_cast<std::size_t>(r)];
      if (!v.is_array() || !v.arr) throw RuntimeError(m.loc, "MI " + std::to_string(r) + " returned no array");
      const Array& a = *v.arr;
      if (ref->pc->partitions(1) && a.length() != want(1))
        throw RuntimeError(m.loc, "assembled length " + std::to_string(a.length()) + " differs from the length " +
                                      std::to_string(want(1)) + " of '" + ref->pc->name + "'");
      const IndexRange& r1 = ref->r1[static_cast<std::size_t>(r)];
      if (m.return_type.rank == 1) {
        std::vector<Value> slice;
        auto part = Array::make(a.elem, r1.size());
        for (std::int64_t k = r1.lo; k < r1.hi; ++k) part->set(k - r1.lo, a.get(k));
        parts.push_back(Value::of_array(part));
        continue;
      }
      rows = a.length();
      std::int64_t c = a.rows.empty() || !a.rows[0] ? 0 : a.rows[0]->length();
      if (cols < 0) cols = c;
      IndexRange r2 = ref->r2.empty() ? full_range(c) : ref->r2[static_cast<std::size_t>(r)];
      if (!ref->pc->partitions(2)) r2 = full_range(c);
      else if (c != want(2))
        throw RuntimeError(m.loc, "assembled width " + std::to_string(c) + " differs from '" + ref->pc->name + "'");
      IndexRange rr = ref->pc->partitions(1) ? r1 : full_range(rows);
      auto block = Array::make2(a.elem, rr.size(), r2.size());
      for (std::int64_t i = rr.lo; i < rr.hi; ++i) {
        const Array& row = *a.rows[static_cast<std::size_t>(i)];
        for (std::int64_t j = r2.lo; j < r2.hi; ++j) block->rows[static_cast<std::size_t>(i - rr.lo)]->set(j - r2.lo, row.get(j));
      }
      parts.push_back(Value::of_array(block));
      roff.push_back(rr.lo);
      coff.push_back(r2.lo);
    }
    if (m.return_type.rank == 1) {
      ReductionEnv env;
      env.expected_length = ref->pc->partitions(1) ? want(1) : -1;
      if (!ref->pc->partitions(1)) return results_[0];
      return apply_reduction(ReduceSpec{}, parts, env);
    }
    if (!ref->pc->partitions(1) && !ref->pc->partitions(2)) return results_[0];
    return assemble_blocks(parts, roff, coff, rows, cols, m.return_type.base);
  }
};

std::int64_t MiHooks::range_bound(int dist_id, int dim, bool upper) {
  const DistState& d = inv_.dist(dist_map[static_cast<std::size_t>(dist_id)]);
  const auto& v = dim == 1 ? d.r1 : d.r2;
  const IndexRange& r = v[static_cast<std::size_t>(rank_)];
  return upper ? r.hi : r.lo;
}

void MiHooks::result_write(const Value& v) {
  if (captured) {
    *captured = v;
    return;
  }
  inv_.write_result(rank_, v);
}

void MiHooks::fence_wait() { inv_.fence_wait(rank_); }

Value MiHooks::sync_combine(const ReduceSpec& r, const Value& local) {
  ReductionEnv env;
  env.registry = &inv_.registry();
  return inv_.intermediate(rank_, r, local, env);
}

Value MiHooks::aux_call(int aux_id, std::vector<Value>& args, SourceLoc) {
  const AuxSite& site = sp_.aux[static_cast<std::size_t>(aux_id)];
  const SlaveProgram& callee = *site.callee;
  MiHooks h(inv_, rank_, callee);
  h.watch_access = watch_access;
  for (const auto& pc : callee.partitions) {
    int caller = site.arg_dist[static_cast<std::size_t>(pc.param_index)];
    h.dist_map.push_back(dist_map[static_cast<std::size_t>(caller)]);
  }
  Value local;
  h.captured = &local;
  Evaluator ev(inv_.program(), &h);
  Frame f = inv_.frame_for(callee, h.dist_map, args, true);
  inv_.seed_shared(callee, ev, f);
  ev.exec(*callee.body, f);

  ReductionEnv env;
  env.registry = &inv_.registry();
  for (const auto& a : callee.reduce->user_args) env.user_args.push_back(ev.eval(*a, f));
  if (callee.reduce->kind == ReduceKind::Self)
    env.self = [&](const Value& arr) { return inv_.self_reduce(site.method_index, args, arr); };
  Value out = inv_.intermediate(rank_, *callee.reduce, local, env);
  const Type& rt = callee.method->return_type;
  return rt.is_scalar() && !out.is_array() ? convert(out, rt.base) : out;
}

void MiHooks::on_access(const Array* root, std::int64_t i, std::int64_t j, bool write, SourceLoc loc) {
  inv_.check_access(rank_, dist_map, root, i, j, write, loc);
}

}  // namespace

Value execute_sm(const ExecutionPlanSM& plan, std::vector<Value> args, const SmOptions& opt, SmStats* stats) {
  Invocation inv(plan, std::move(args), opt);
  return inv.run(stats);
}

}  // namespace somd
