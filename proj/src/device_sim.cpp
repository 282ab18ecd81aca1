#include "somd/device_sim.hpp"

#include <algorithm>
#include <json.hpp>
#include <numeric>
#include <random>
#include <tuple>

#include "somd/diagnostics.hpp"

namespace somd {

struct DeviceState::Entry {
  std::weak_ptr<Array> host;
  ArrayPtr buf;  // flat, row-major for rank 2
  int id = -1;
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  bool fresh = false;  // allocated by host code and never written there: device copy starts zeroed
  bool valid = false;  // device copy matches the host
  bool dirty = false;  // device copy is newer than the host
};

namespace {

constexpr std::size_t kMaxHazards = 64;       // kept per launch
constexpr std::size_t kHazardScan = 4096;      // collected before sorting

std::int64_t elem_bytes(BaseType b, bool f32) {
  switch (b) {
    case BaseType::Int:
      return 4;
    case BaseType::Bool:
      return 1;
    case BaseType::Double:
      return f32 ? 4 : 8;
    default:
      return 8;
  }
}

struct Cell {
  std::int64_t writer = -1;
  std::int64_t r1 = -1;
  std::int64_t r2 = -1;
};

class KernelHooks : public ExecHooks {
 public:
  struct Tracked {
    std::string name;
    std::vector<Cell> cells;
  };

  std::map<const Array*, Tracked> tracked;
  std::vector<HazardRecord> found;
  bool strict = false;
  int launch_index = 0;
  std::int64_t group = 0;
  Value result;
  bool has_result = false;

  void result_write(const Value& v) override {
    result = v;
    has_result = true;
  }

  void on_access(const Array* root, std::int64_t i, std::int64_t, bool write, SourceLoc) override {
    auto it = tracked.find(root);
    if (it == tracked.end() || i < 0 || i >= static_cast<std::int64_t>(it->second.cells.size())) return;
    Cell& c = it->second.cells[static_cast<std::size_t>(i)];
    if (write) {
      if (c.writer >= 0 && c.writer != group) hazard(it->second.name, i, c.writer, group);
      if (c.r1 >= 0 && c.r1 != group) hazard(it->second.name, i, group, c.r1);
      if (c.r2 >= 0 && c.r2 != group) hazard(it->second.name, i, group, c.r2);
      c.writer = group;
    } else {
      if (c.writer >= 0 && c.writer != group) hazard(it->second.name, i, c.writer, group);
      if (c.r1 < 0)
        c.r1 = group;
      else if (c.r1 != group && c.r2 < 0)
        c.r2 = group;
    }
  }

 private:
  void hazard(const std::string& buf, std::int64_t cell, std::int64_t writer, std::int64_t other) {
    HazardRecord h{launch_index, buf, cell, writer, other};
    if (found.size() < kHazardScan) found.push_back(h);
    if (strict)
      throw HazardError("cell " + std::to_string(cell) + " of " + buf + " is shared by work groups " +
                        std::to_string(writer) + " and " + std::to_string(other) + " in launch " +
                        std::to_string(launch_index));
  }
};

Value fold_op(Op op, const Value& a, const Value& b, BaseType t) {
  return convert(apply_binary(op == Op::Mul ? Op::Mul : Op::Add, a, b), t);
}

Value identity(Op op, BaseType t) { return convert(Value::of_int(op == Op::Mul ? 1 : 0), t); }

}  // namespace

DeviceState::DeviceState(DeviceOptions opt) : opt_(std::move(opt)) {
  if (opt_.max_group < 1) opt_.max_group = 1;
}

DeviceState::~DeviceState() = default;

void DeviceState::clear_ledger() {
  transfers_.clear();
  launches_.clear();
  hazards_.clear();
}

double DeviceState::round(double d) const { return opt_.force_f32 ? static_cast<double>(static_cast<float>(d)) : d; }

DeviceState::Entry* DeviceState::find(const Array* a) {
  auto it = entries_.find(a);
  if (it == entries_.end()) return nullptr;
  if (it->second->host.expired()) {
    // Address reuse after the host array died.
    entries_.erase(it);
    row_parent_.erase(a);
    return nullptr;
  }
  return it->second.get();
}

DeviceState::Entry& DeviceState::entry_for(const ArrayPtr& a, const std::string& name) {
  if (Entry* e = find(a.get())) return *e;
  if (entries_.size() >= sweep_at_) {
    std::erase_if(entries_, [](const auto& kv) { return kv.second->host.expired(); });
    sweep_at_ = std::max<std::size_t>(1024, entries_.size() * 2);
  }
  auto e = std::make_unique<Entry>();
  e->host = a;
  e->id = next_buffer_++;
  e->name = name;
  Entry& ref = *e;
  entries_[a.get()] = std::move(e);
  return ref;
}

void DeviceState::record(bool to_device, const Entry& e, std::int64_t cells, BaseType elem) {
  transfers_.push_back(TransferRecord{to_device, e.id, e.name, cells * elem_bytes(elem, opt_.force_f32),
                                      static_cast<int>(launches_.size())});
}

void DeviceState::put(Entry& e) {
  ArrayPtr h = e.host.lock();
  Array& b = *e.buf;
  auto copy_row = [&](const Array& src, std::int64_t off) {
    if (src.is_double()) {
      for (std::size_t k = 0; k < src.dbls.size(); ++k) b.dbls[static_cast<std::size_t>(off) + k] = round(src.dbls[k]);
    } else {
      std::copy(src.ints.begin(), src.ints.end(), b.ints.begin() + off);
    }
  };
  if (h->rank == 1) {
    copy_row(*h, 0);
  } else {
    for (std::int64_t r = 0; r < e.rows; ++r) {
      const ArrayPtr& row = h->rows[static_cast<std::size_t>(r)];
      if (!row || row->length() != e.cols)
        throw RuntimeError({}, "array '" + e.name + "' changed shape while on the device");
      copy_row(*row, r * e.cols);
    }
  }
  record(true, e, b.length(), h->elem);
  e.valid = true;
  e.dirty = false;
}

void DeviceState::get(Entry& e) {
  ArrayPtr h = e.host.lock();
  const Array& b = *e.buf;
  auto copy_row = [&](Array& dst, std::int64_t off) {
    if (dst.is_double())
      std::copy(b.dbls.begin() + off, b.dbls.begin() + off + dst.length(), dst.dbls.begin());
    else
      std::copy(b.ints.begin() + off, b.ints.begin() + off + dst.length(), dst.ints.begin());
  };
  if (h->rank == 1) {
    copy_row(*h, 0);
  } else {
    for (std::int64_t r = 0; r < e.rows; ++r) copy_row(*h->rows[static_cast<std::size_t>(r)], r * e.cols);
  }
  record(false, e, b.length(), h->elem);
  e.dirty = false;
}

ArrayPtr DeviceState::acquire(const ArrayPtr& host, const std::string& name) {
  Entry& e = entry_for(host, name);
  auto pit = row_parent_.find(host.get());
  if (pit != row_parent_.end()) {
    // A row of a matrix: the matrix may hold newer data, and the row copy is never trusted.
    if (Entry* parent = find(pit->second); parent && parent->dirty) get(*parent);
    if (!e.dirty) e.valid = false;
  }
  if (!e.buf) {
    if (host->rank == 1) {
      e.rows = host->length();
      e.cols = 1;
    } else {
      e.rows = host->length();
      e.cols = e.rows > 0 && host->rows[0] ? host->rows[0]->length() : 0;
      for (const auto& r : host->rows)
        if (!r || r->length() != e.cols)
          throw RuntimeError({}, "ragged array '" + name + "' cannot be copied to the device");
    }
    e.buf = Array::make(host->elem, e.rows * (host->rank == 1 ? 1 : e.cols));
    if (e.fresh)
      e.valid = true;
    else
      put(e);
  } else if (!e.valid) {
    put(e);
  }
  if (host->rank == 2)
    for (const auto& r : host->rows) row_parent_[r.get()] = host.get();
  return e.buf;
}

void DeviceState::host_alloc(const ArrayPtr& a) {
  Entry& e = entry_for(a, "");
  e.fresh = true;
}

void DeviceState::host_access(const Array* root, std::int64_t j, bool write) {
  auto pit = row_parent_.find(root);
  if (pit != row_parent_.end()) {
    if (Entry* parent = find(pit->second)) {
      if (parent->dirty) get(*parent);
      if (write) parent->valid = false;
    }
  }
  Entry* e = find(root);
  if (!e) return;
  ArrayPtr h = e->host.lock();
  if (h->rank == 2 && j < 0 && !write) return;  // row handle only
  if (e->dirty) get(*e);
  if (write) {
    e->valid = false;
    e->fresh = false;
  }
}

void DeviceState::forget_host_copies() {
  for (auto& [ptr, e] : entries_)
    if (!e->dirty) {
      e->valid = false;
      e->fresh = false;
    }
}

void DeviceState::to_host(const Value& v) {
  if (!v.is_array() || !v.arr) return;
  host_access(v.arr.get(), 0, false);
}

const ExecutionPlanGPU& DeviceState::plan_for(const Program& p, int method_index) {
  auto& slot = plans_[{&p, method_index}];
  if (!slot) slot = std::make_unique<ExecutionPlanGPU>(plan_gpu(p, method_index));
  return *slot;
}

Value DeviceState::run_kernel(const ExecutionPlanGPU& plan, const KernelIR& k, Frame& kf, std::int64_t problem) {
  const GridConfig grid = grid_config(problem, opt_.max_group);
  const int launch_index = static_cast<int>(launches_.size());
  launches_.push_back(LaunchRecord{k.id, plan.method().name, k.origin, grid, problem});

  KernelHooks hooks;
  hooks.strict = opt_.strict_hazards;
  hooks.launch_index = launch_index;
  hooks.watch_access = opt_.track_hazards;
  if (opt_.track_hazards)
    for (const auto& b : k.buffers) {
      const Value& v = kf.slots[static_cast<std::size_t>(b.slot)];
      hooks.tracked[v.arr.get()] =
          KernelHooks::Tracked{b.name, std::vector<Cell>(static_cast<std::size_t>(v.arr->length()))};
    }
  Evaluator ev(*plan.program, &hooks);

  std::vector<std::int64_t> order(static_cast<std::size_t>(grid.n_groups));
  std::iota(order.begin(), order.end(), 0);
  if (opt_.seed != 0) {
    std::mt19937_64 rng(opt_.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(launch_index + 1)));
    std::shuffle(order.begin(), order.end(), rng);
  }

  const auto gs = static_cast<std::size_t>(grid.group_size);
  std::vector<Value> partials;
  std::vector<Value> scratch;
  BaseType rt = BaseType::Int;
  if (k.reduce) {
    rt = k.reduce->type.base;
    partials.assign(static_cast<std::size_t>(grid.n_groups), identity(k.reduce->op, rt));
    scratch.resize(gs);
  }
  Value& gid_v = kf.slots[static_cast<std::size_t>(k.gid_slot)];
  for (std::int64_t g : order) {
    hooks.group = g;
    for (std::size_t t = 0; t < gs; ++t) {
      const std::int64_t gid = g * grid.group_size + static_cast<std::int64_t>(t);
      gid_v = Value::of_int(static_cast<std::int32_t>(gid));
      try {
        ev.exec(*k.body, kf);
      } catch (const RuntimeError& err) {
        throw DeviceFault(gid, err.what());
      }
      if (k.reduce) scratch[t] = kf.slots[static_cast<std::size_t>(k.reduce->part_slot)];
    }
    if (k.reduce) {
      // Lockstep halving, as a work group would do in local memory.
      for (std::size_t width = gs; width > 1;) {
        std::size_t half = (width + 1) / 2;
        for (std::size_t t = 0; t + half < width; ++t) scratch[t] = fold_op(k.reduce->op, scratch[t], scratch[t + half], rt);
        width = half;
      }
      Value p = scratch[0];
      if (p.kind == Value::Kind::Double) p.d = round(p.d);
      partials[static_cast<std::size_t>(g)] = p;
    }
  }
  {
    // Group order is seeded, so sort before keeping the first few.
    auto key = [](const HazardRecord& h) { return std::tuple(h.writer_group, h.cell, h.other_group, h.buffer); };
    std::sort(hooks.found.begin(), hooks.found.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    hooks.found.erase(std::unique(hooks.found.begin(), hooks.found.end(),
                                  [&](const auto& a, const auto& b) { return key(a) == key(b); }),
                      hooks.found.end());
    for (std::size_t n = 0; n < hooks.found.size() && n < kMaxHazards; ++n) hazards_.push_back(hooks.found[n]);
  }
  if (k.reduce) {
    transfers_.push_back(TransferRecord{false, -1, "partials_K" + std::to_string(k.id),
                                        grid.n_groups * elem_bytes(rt, opt_.force_f32),
                                        static_cast<int>(launches_.size())});
    if (k.reduce->self) {
      std::vector<std::int64_t> ints;
      std::vector<double> dbls;
      for (const auto& p : partials) {
        ints.push_back(p.i);
        dbls.push_back(p.d);
      }
      return Value::of_array(rt == BaseType::Double ? Array::from_doubles(std::move(dbls))
                                                    : Array::from_ints(rt, std::move(ints)));
    }
    Value acc = identity(k.reduce->op, rt);
    for (const auto& p : partials) acc = fold_op(k.reduce->op, acc, p, rt);
    return acc;
  }
  if (hooks.has_result) return hooks.result;
  return Value{};
}

Value DeviceState::launch(const ExecutionPlanGPU& plan, const KernelIR& k, Frame& host, Evaluator& host_eval) {
  std::int64_t size[2] = {0, 1};
  for (std::size_t d = 0; d < k.span.size() && d < 2; ++d) {
    const auto& [ext, up] = k.span[d];
    std::int64_t s = host_eval.eval(*up, host).as_long();
    if (ext) s = std::max(s, host_eval.eval(*ext, host).as_long());
    size[d] = std::max<std::int64_t>(s, 0);
  }
  const std::int64_t problem = k.dims == 0 ? 1 : (k.dims == 2 ? size[0] * size[1] : size[0]);

  Frame kf;
  kf.slots.resize(static_cast<std::size_t>(k.frame_size));
  for (const auto& s : k.scalars) {
    Value v = host.slots[static_cast<std::size_t>(s.slot)];
    if (v.kind == Value::Kind::Double) v.d = round(v.d);
    kf.slots[static_cast<std::size_t>(s.slot)] = v;
  }
  std::vector<std::pair<const KernelBuffer*, ArrayPtr>> bound;
  for (const auto& b : k.buffers) {
    const Value& hv = host.slots[static_cast<std::size_t>(b.slot)];
    if (!hv.is_array() || !hv.arr) throw RuntimeError({}, "array '" + b.name + "' is not allocated");
    ArrayPtr buf = acquire(hv.arr, b.name);
    Entry* e = find(hv.arr.get());
    if (e->name.empty()) e->name = b.name;
    kf.slots[static_cast<std::size_t>(b.slot)] = Value::of_array(buf);
    if (b.type.rank == 2) {
      kf.slots[static_cast<std::size_t>(b.rows_slot)] = Value::of_int(static_cast<std::int32_t>(e->rows));
      kf.slots[static_cast<std::size_t>(b.cols_slot)] = Value::of_int(static_cast<std::int32_t>(e->cols));
    }
    bound.emplace_back(&b, hv.arr);
  }
  if (k.width_slot >= 0) kf.slots[static_cast<std::size_t>(k.width_slot)] = Value::of_int(static_cast<std::int32_t>(size[1]));

  Value folded = run_kernel(plan, k, kf, problem);

  for (const auto& [b, h] : bound) {
    if (!b->written) continue;
    Entry* e = find(h.get());
    if (opt_.force_f32 && e->buf->is_double())
      for (double& d : e->buf->dbls) d = round(d);
    e->dirty = true;
    e->fresh = false;
    auto pit = row_parent_.find(h.get());
    if (pit != row_parent_.end()) {
      // Written row: the matrix's device copy no longer matches, bring the row home now.
      get(*e);
      if (Entry* parent = find(pit->second)) parent->valid = false;
    }
  }
  if (k.reduce) {
    Value& acc = host.slots[static_cast<std::size_t>(k.reduce->acc_slot)];
    const BaseType t = k.reduce->type.base;
    if (k.reduce->self) {
      Evaluator seq(*plan.program);
      Value r = seq.invoke(plan.program->methods[static_cast<std::size_t>(plan.method_index)], {folded});
      acc = fold_op(Op::Add, acc, r, t);
    } else {
      acc = fold_op(k.reduce->op, acc, folded, t);
    }
    return Value{};
  }
  return folded;
}

Value DeviceState::launch_scalar(const ExecutionPlanGPU& plan, std::vector<Value> args) {
  const MethodDecl& m = plan.method();
  const KernelIR& k = plan.kernels.at(0);
  Frame host;
  host.slots.resize(static_cast<std::size_t>(k.frame_size));
  for (std::size_t a = 0; a < m.params.size() && a < args.size(); ++a) {
    const Param& p = m.params[a];
    Value v = std::move(args[a]);
    if (!p.type.is_array()) {
      v = convert(v, p.type.base);
    } else if (v.arr) {
      bool written = false;
      for (const auto& b : k.buffers)
        if (b.slot == p.slot) written = b.written;
      if (written) {
        to_host(v);
        v = Value::of_array(v.arr->deep_copy());
      }
    }
    host.slots[static_cast<std::size_t>(p.slot)] = std::move(v);
  }
  Evaluator ev(*plan.program);
  Value out = launch(plan, k, host, ev);
  if (m.return_type.base == BaseType::Void) return Value{};
  transfers_.push_back(TransferRecord{false, -1, "results", elem_bytes(m.return_type.base, opt_.force_f32),
                                      static_cast<int>(launches_.size())});
  if (out.is_void()) throw RuntimeError(m.loc, "'" + m.name + "' finished without a result");
  if (out.kind == Value::Kind::Double) out.d = round(out.d);
  return convert(out, m.return_type.base);
}

namespace {

class GpuHostHooks : public ExecHooks {
 public:
  GpuHostHooks(const ExecutionPlanGPU& plan, DeviceState& dev, const GpuDispatcher& dispatch)
      : plan_(plan), dev_(dev), dispatch_(dispatch) {
    watch_access = true;
  }

  Evaluator* ev = nullptr;

  void launch(int kernel_id, Frame& frame, SourceLoc) override {
    dev_.launch(plan_, plan_.kernels.at(static_cast<std::size_t>(kernel_id)), frame, *ev);
  }
  void fence_wait() override {}
  Value sync_combine(const ReduceSpec&, const Value& local) override { return local; }
  Value aux_call(int aux_id, std::vector<Value>& args, SourceLoc) override {
    return run_gpu(*plan_.aux.at(static_cast<std::size_t>(aux_id)), std::move(args), dev_, dispatch_, false);
  }
  bool intercept_call(int method_index, std::vector<Value>& args, Value& out) override {
    if (dispatch_ && dispatch_(method_index, args, out)) return true;
    const Program& p = *plan_.program;
    if (p.methods[static_cast<std::size_t>(method_index)].is_somd) {
      out = run_gpu(dev_.plan_for(p, method_index), args, dev_, dispatch_, false);
      return true;
    }
    // Runs inline; the callee's parameter copies read host memory directly.
    for (const auto& a : args) dev_.to_host(a);
    return false;
  }
  void on_access(const Array* root, std::int64_t, std::int64_t j, bool write, SourceLoc) override {
    dev_.host_access(root, j, write);
  }
  void on_alloc(const ArrayPtr& a) override { dev_.host_alloc(a); }

 private:
  const ExecutionPlanGPU& plan_;
  DeviceState& dev_;
  const GpuDispatcher& dispatch_;
};

}  // namespace

Value run_gpu(const ExecutionPlanGPU& plan, std::vector<Value> args, DeviceState& dev, const GpuDispatcher& dispatch,
              bool fetch_result) {
  const MethodDecl& m = plan.method();
  if (fetch_result) dev.forget_host_copies();  // the caller may have changed anything since
  for (std::size_t a = 0; a < m.params.size() && a < args.size(); ++a)
    if (m.params[a].type.is_array() && m.params[a].written) dev.to_host(args[a]);
  Value out;
  if (plan.scalar_kernel) {
    out = dev.launch_scalar(plan, std::move(args));
  } else {
    GpuHostHooks hooks(plan, dev, dispatch);
    Evaluator ev(*plan.program, &hooks);
    hooks.ev = &ev;
    std::vector<Value> kept = args;
    out = ev.invoke(m, std::move(args));
    if (plan.reduce && plan.reduce->kind == ReduceKind::User) {
      // A single device is a single instance; only a user reducer may still change the value.
      ReductionEnv env;
      env.registry = dev.options().registry ? dev.options().registry : &StrategyRegistry::defaults();
      Frame f;
      f.slots.resize(static_cast<std::size_t>(m.num_slots));
      for (std::size_t a = 0; a < m.params.size() && a < kept.size(); ++a)
        f.slots[static_cast<std::size_t>(m.params[a].slot)] = kept[a];
      Evaluator plain(*plan.program);
      for (const auto& e : plan.reduce->user_args) env.user_args.push_back(plain.eval(*e, f));
      dev.to_host(out);
      out = apply_reduction(*plan.reduce, {out}, env);
    }
  }
  if (fetch_result) dev.to_host(out);
  if (m.return_type.is_scalar() && !out.is_void() && !out.is_array()) out = convert(out, m.return_type.base);
  return out;
}

std::string ledger_json(const DeviceState& dev) {
  nlohmann::json j;
  j["transfers"] = nlohmann::json::array();
  for (const auto& t : dev.transfers())
    j["transfers"].push_back({{"direction", t.to_device ? "put" : "get"},
                              {"buffer", t.buffer},
                              {"name", t.name},
                              {"bytes", t.bytes},
                              {"launch_index", t.launch_index}});
  j["launches"] = nlohmann::json::array();
  for (const auto& l : dev.launches())
    j["launches"].push_back({{"kernel", l.kernel},
                             {"method", l.method},
                             {"origin", l.origin},
                             {"n_groups", l.grid.n_groups},
                             {"group_size", l.grid.group_size},
                             {"total_threads", l.grid.total_threads},
                             {"problem", l.problem}});
  j["hazards"] = nlohmann::json::array();
  for (const auto& h : dev.hazards())
    j["hazards"].push_back({{"launch", h.launch},
                            {"buffer", h.buffer},
                            {"cell", h.cell},
                            {"writer_group", h.writer_group},
                            {"other_group", h.other_group}});
  return j.dump(2);
}

}  // namespace somd
