#include "somd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

#include "somd/interp.hpp"

namespace somd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<Value> copy_args(const std::vector<Value>& args) {
  std::vector<Value> out;
  for (const auto& a : args) out.push_back(a.is_array() && a.arr ? Value::of_array(a.arr->deep_copy()) : a);
  return out;
}

LedgerSummary summarize(const DeviceState& dev) {
  LedgerSummary s;
  for (const auto& t : dev.transfers()) {
    if (t.to_device) {
      ++s.puts;
      s.bytes_in += t.bytes;
    } else {
      ++s.gets;
      s.bytes_out += t.bytes;
    }
  }
  s.launches = static_cast<int>(dev.launches().size());
  s.hazards = static_cast<int>(dev.hazards().size());
  return s;
}

}  // namespace

double middle_tier_mean(std::vector<double> samples) {
  if (samples.empty()) return 0;
  std::sort(samples.begin(), samples.end());
  std::size_t n = samples.size();
  std::size_t lo = n >= 3 ? n / 3 : 0;
  std::size_t hi = n >= 3 ? n - n / 3 : n;
  return std::accumulate(samples.begin() + static_cast<std::ptrdiff_t>(lo), samples.begin() + static_cast<std::ptrdiff_t>(hi), 0.0) /
         static_cast<double>(hi - lo);
}

BenchReport bench(const BenchConfig& cfg) {
  const CorpusProgram* c = find_corpus(cfg.program);
  if (!c) throw std::invalid_argument("unknown benchmark '" + cfg.program + "'");
  const Program& prog = corpus_program(*c);
  GenConfig gen = cfg.gen;
  if (gen.size < 0) gen.size = c->desk_size;
  const std::vector<Value> args = c->make_args(gen);

  BenchReport r;
  r.program = c->name;
  r.backend = backend_name(cfg.backend);
  r.size = gen.size;

  auto t0 = Clock::now();
  Value oracle = interpret(prog, c->entry, copy_args(args));
  r.seq_ms = ms_since(t0);
  r.oracle_checksum = checksum(oracle);

  EngineOptions eo;
  eo.force = cfg.backend;
  eo.rules = cfg.rules;
  eo.slaves = cfg.slaves;
  eo.sm.workers = cfg.workers;
  eo.sm.watchdog = std::chrono::milliseconds(0);
  eo.gpu = cfg.gpu;
  Engine engine(prog, eo);
  r.slaves = cfg.backend == Backend::Sm ? engine.slaves() : (cfg.backend == Backend::Seq ? 1 : 0);
  if (cfg.backend == Backend::GpuSim) r.group_size = engine.device().options().max_group;

  Value out;
  for (int k = 0; k < std::max(1, cfg.reps); ++k) {
    std::vector<Value> in = copy_args(args);
    engine.device().clear_ledger();
    t0 = Clock::now();
    out = engine.run(c->entry, std::move(in));
    r.times_ms.push_back(ms_since(t0));
    if (k == 0 && cfg.backend == Backend::GpuSim) r.ledger = summarize(engine.device());
  }
  r.middle_tier_ms = middle_tier_mean(r.times_ms);
  r.checksum = checksum(out);
  r.warnings = engine.warnings();

  const double tol = cfg.backend == Backend::GpuSim ? 1e-6 : 1e-12;
  r.max_rel_diff = max_rel_diff(out, oracle);
  if (r.checksum != r.oracle_checksum && !values_close(out, oracle, tol))
    throw std::runtime_error(c->name + ": output differs from the sequential oracle (max relative difference " +
                             std::to_string(r.max_rel_diff) + ")");
  if (c->check) {
    RunFn run = [&](const std::string& m, std::vector<Value> a) { return engine.run(m, std::move(a)); };
    std::string why = c->check(args, out, run);
    if (!why.empty()) throw std::runtime_error(c->name + ": " + why);
  }

  if (cfg.speedup) {
    EngineOptions one = eo;
    one.force = Backend::Sm;
    one.slaves = 1;
    Engine e1(prog, one);
    std::vector<double> t;
    for (int k = 0; k < std::max(1, cfg.reps); ++k) {
      std::vector<Value> in = copy_args(args);
      t0 = Clock::now();
      e1.run(c->entry, std::move(in));
      t.push_back(ms_since(t0));
    }
    r.one_slave_ms = middle_tier_mean(t);
  }
  return r;
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["program"] = program;
  j["backend"] = backend;
  j["n_slaves"] = slaves;
  if (group_size > 0) j["grid"] = {{"group_size", group_size}};
  j["size"] = size;
  j["times_ms"] = times_ms;
  j["middle_tier_ms"] = middle_tier_ms;
  j["seq_ms"] = seq_ms;
  if (seq_ms > 0 && middle_tier_ms > 0) j["ratio_vs_seq"] = middle_tier_ms / seq_ms;
  if (one_slave_ms) {
    j["one_slave_ms"] = *one_slave_ms;
    if (middle_tier_ms > 0) j["speedup_vs_one_slave"] = *one_slave_ms / middle_tier_ms;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(checksum));
  j["checksum"] = buf;
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(oracle_checksum));
  j["oracle_checksum"] = buf;
  j["max_rel_diff"] = max_rel_diff;
  if (ledger)
    j["ledger"] = {{"puts", ledger->puts},         {"gets", ledger->gets},
                   {"launches", ledger->launches}, {"bytes_in", ledger->bytes_in},
                   {"bytes_out", ledger->bytes_out}, {"hazards", ledger->hazards}};
  if (!warnings.empty()) j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace somd
