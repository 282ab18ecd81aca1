#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "somd/bench.hpp"
#include "somd/diagnostics.hpp"
#include "somd/engine.hpp"
#include "somd/interp.hpp"
#include "somd/plan_gpu.hpp"
#include "somd/plan_sm.hpp"
#include "somd/validate.hpp"

using namespace somd;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Value from_json(const nlohmann::json& j, const Type& t) {
  if (t.rank == 0) {
    switch (t.base) {
      case BaseType::Bool:
        return Value::of_bool(j.get<bool>());
      case BaseType::Double:
        return Value::of_double(j.get<double>());
      case BaseType::Long:
        return Value::of_long(j.get<std::int64_t>());
      default:
        return Value::of_int(j.get<std::int32_t>());
    }
  }
  if (!j.is_array()) throw std::runtime_error("expected a JSON array for " + to_string(t));
  if (t.rank == 1) {
    if (t.base == BaseType::Double) return Value::of_array(Array::from_doubles(j.get<std::vector<double>>()));
    std::vector<std::int64_t> v;
    for (const auto& x : j) v.push_back(x.is_boolean() ? (x.get<bool>() ? 1 : 0) : x.get<std::int64_t>());
    return Value::of_array(Array::from_ints(t.base, std::move(v)));
  }
  auto a = Array::make2(t.base, 0, 0);
  a->rows.clear();
  for (const auto& row : j) a->rows.push_back(from_json(row, Type{t.base, 1}).arr);
  return Value::of_array(a);
}

struct Common {
  int workers = 0;
  int slaves = 0;
  std::int64_t gpu_max_group = 256;
  std::uint64_t gpu_seed = 0;
  bool gpu_strict = false;
  bool force_f32 = false;
  std::uint64_t stress_seed = 0;
  bool no_gpu = false;
  std::string config;

  void add(CLI::App* app) {
    app->add_option("--workers", workers, "worker threads (0: one per core)");
    app->add_option("--slaves", slaves, "method instances per SOMD call (0: one per worker)");
    app->add_option("--gpu-max-group", gpu_max_group, "threads per work group on the simulated device");
    app->add_option("--gpu-seed", gpu_seed, "seed for the group execution order (0: in order)");
    app->add_flag("--gpu-strict-hazards", gpu_strict, "fail on a cross-group hazard");
    app->add_flag("--force-f32", force_f32, "round doubles to single precision on the device");
    app->add_option("--stress-seed", stress_seed, "randomize instance scheduling");
    app->add_flag("--no-gpu", no_gpu, "treat gpu-sim as unavailable");
    app->add_option("--config", config, "backend rule file");
  }

  EngineOptions engine() const {
    EngineOptions o;
    if (!config.empty()) o.rules = parse_backend_rules(slurp(config));
    o.slaves = slaves;
    o.sm.workers = workers;
    o.sm.stress_seed = stress_seed;
    o.gpu.max_group = gpu_max_group;
    o.gpu.seed = gpu_seed;
    o.gpu.strict_hazards = gpu_strict;
    o.gpu.force_f32 = force_f32;
    o.gpu_enabled = !no_gpu;
    return o;
  }
};

int report(const std::vector<Diagnostic>& diags, bool json) {
  if (json)
    std::cout << diagnostics_to_json(diags) << "\n";
  else
    for (const auto& d : diags) std::cerr << d.format() << "\n";
  return has_errors(diags) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOMD-mini compiler, runtimes and benchmarks"};
  app.require_subcommand(1);
  bool diag_json = false;
  app.add_flag("--diag-json", diag_json, "print diagnostics as JSON on stdout");

  std::string file;
  auto* check = app.add_subcommand("check", "parse and validate a program");
  check->add_option("FILE", file)->required();

  auto* inspect = app.add_subcommand("inspect", "show the lowered form of SOMD methods");
  inspect->add_option("FILE", file)->required();
  bool emit_plan = false, emit_kernels = false;
  std::string method;
  auto* g = inspect->add_option_group("what")->require_option(1);
  g->add_flag("--emit-plan", emit_plan, "shared-memory master code");
  g->add_flag("--emit-kernels", emit_kernels, "GPU host code, kernels and transfers");
  inspect->add_option("--method", method, "only this method");
  Common inspect_opts;
  inspect_opts.add(inspect);

  auto* run = app.add_subcommand("run", "execute a method");
  run->add_option("FILE", file)->required();
  std::string backend = "sm";
  std::vector<std::string> arg_text;
  std::string ledger_out;
  run->add_option("--backend", backend, "seq | sm | gpu-sim")->check(CLI::IsMember({"seq", "sm", "gpu-sim"}));
  run->add_option("--method", method, "method to call (default: first)");
  // JSON arrays must reach us whole, not split on commas.
  run->add_option("--arg", arg_text, "argument as JSON, in parameter order")->allow_extra_args(false)->delimiter('\x1f');
  run->add_option("--ledger-json", ledger_out, "write the device ledger here");
  Common run_opts;
  run_opts.add(run);

  auto* benchc = app.add_subcommand("bench", "time a corpus program");
  std::string name;
  benchc->add_option("NAME", name)->required();
  BenchConfig bc;
  std::string json_out;
  std::string bench_backend = "sm";
  benchc->add_option("--size", bc.gen.size, "problem size (default: desk scale)");
  benchc->add_option("--extra", bc.gen.extra, "second size knob (points, iterations)");
  benchc->add_option("--seed", bc.gen.seed, "input generator seed");
  benchc->add_option("--reps", bc.reps, "repetitions");
  benchc->add_option("--json", json_out, "write the report here");
  benchc->add_option("--backend", bench_backend, "seq | sm | gpu-sim")->check(CLI::IsMember({"seq", "sm", "gpu-sim"}));
  benchc->add_flag("--speedup", bc.speedup, "also time one instance on sm");
  Common bench_opts;
  bench_opts.add(benchc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*check) {
      Program p;
      std::vector<Diagnostic> diags;
      try {
        compile(slurp(file), &diags);
      } catch (const CompileError& e) {
        diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
      }
      int rc = report(diags, diag_json);
      if (rc == 0 && !diag_json) std::cout << file << ": ok\n";
      return rc;
    }
    if (*inspect) {
      Program p = compile(slurp(file));
      EngineOptions eo = inspect_opts.engine();
      Engine eng(p, eo);
      bool any = false;
      for (std::size_t k = 0; k < p.methods.size(); ++k) {
        const MethodDecl& m = p.methods[k];
        if (!method.empty() ? m.name != method : !m.is_somd) continue;
        any = true;
        if (emit_plan) {
          std::cout << print_plan(lower_master_sm(p, static_cast<int>(k), eng.slaves())) << "\n";
        } else {
          ExecutionPlanGPU plan = plan_gpu(p, static_cast<int>(k));
          for (const auto& w : plan.warnings) std::cerr << w.format() << "\n";
          std::cout << print_kernels(plan, eo.gpu.max_group) << "\n";
        }
      }
      if (!any) throw std::runtime_error(method.empty() ? "no SOMD methods" : "no method named '" + method + "'");
      return 0;
    }
    if (*run) {
      std::vector<Diagnostic> warns;
      Program p = compile(slurp(file), &warns);
      report(warns, false);
      int idx = method.empty() ? 0 : p.index_of(method);
      if (idx < 0 || p.methods.empty()) throw std::runtime_error("no method named '" + method + "'");
      const MethodDecl& m = p.methods[static_cast<std::size_t>(idx)];
      if (arg_text.size() != m.params.size())
        throw std::runtime_error(m.name + " takes " + std::to_string(m.params.size()) + " arguments, got " +
                                 std::to_string(arg_text.size()));
      std::vector<Value> args;
      for (std::size_t k = 0; k < arg_text.size(); ++k)
        args.push_back(from_json(nlohmann::json::parse(arg_text[k]), m.params[k].type));
      EngineOptions eo = run_opts.engine();
      if (run->count("--backend") || eo.rules.empty()) eo.force = parse_backend(backend);
      Engine eng(p, eo);
      Value out = eng.run(m.name, std::move(args));
      for (const auto& w : eng.warnings()) std::cerr << "warning: " << w << "\n";
      std::cout << format_value(out, 1u << 20) << "\n";
      if (!ledger_out.empty()) std::ofstream(ledger_out) << ledger_json(eng.device()) << "\n";
      return 0;
    }
    if (*benchc) {
      bc.program = name;
      EngineOptions eo = bench_opts.engine();
      bc.rules = eo.rules;
      if (benchc->count("--backend") || eo.rules.empty()) {
        bc.backend = *parse_backend(bench_backend);
      } else {
        const CorpusProgram* c = find_corpus(name);
        if (!c) throw std::invalid_argument("unknown benchmark '" + name + "'");
        std::set<Backend> avail{Backend::Seq, Backend::Sm};
        if (eo.gpu_enabled) avail.insert(Backend::GpuSim);
        BackendChoice choice = select_backend(eo.rules, c->entry, avail);
        if (!choice.warning.empty()) std::cerr << "warning: " << choice.warning << "\n";
        bc.backend = choice.backend;
      }
      bc.slaves = bench_opts.slaves;
      bc.workers = bench_opts.workers;
      bc.gpu = eo.gpu;
      BenchReport r = bench(bc);
      std::string js = r.to_json();
      if (!json_out.empty()) std::ofstream(json_out) << js << "\n";
      std::cout << js << "\n";
      return 0;
    }
  } catch (const CompileError& e) {
    return report(e.diagnostics(), diag_json) ? 1 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
