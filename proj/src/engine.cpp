#include "somd/engine.hpp"

#include <sstream>
#include <thread>

#include "somd/diagnostics.hpp"
#include "somd/interp.hpp"

namespace somd {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Seq:
      return "seq";
    case Backend::Sm:
      return "sm";
    case Backend::GpuSim:
      return "gpu-sim";
    case Backend::Cluster:
      return "cluster";
  }
  return "?";
}

std::optional<Backend> parse_backend(const std::string& s) {
  if (s == "seq") return Backend::Seq;
  if (s == "sm") return Backend::Sm;
  if (s == "gpu-sim" || s == "gpu") return Backend::GpuSim;
  if (s == "cluster") return Backend::Cluster;
  return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

[[noreturn]] void config_error(int line, const std::string& msg) {
  throw CompileError({Diagnostic{DiagCode::ConfigError, Severity::Error, SourceLoc{line, 1}, msg}});
}

}  // namespace

std::vector<BackendRule> parse_backend_rules(const std::string& text) {
  std::vector<BackendRule> rules;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    auto colon = s.rfind(':');
    if (colon == std::string::npos) config_error(line, "expected 'Qualifier.method:target'");
    std::string lhs = trim(s.substr(0, colon));
    std::string target = trim(s.substr(colon + 1));
    BackendRule r;
    r.line = line;
    auto dot = lhs.rfind('.');
    if (dot == std::string::npos) config_error(line, "expected 'Qualifier.method:target'");
    r.qualifier = lhs.substr(0, dot);
    r.method = lhs.substr(dot + 1);
    std::istringstream qs(r.qualifier);
    for (std::string part; std::getline(qs, part, '.');)
      if (!ident(part)) config_error(line, "bad qualifier '" + r.qualifier + "'");
    if (!ident(r.method)) config_error(line, "bad method name '" + r.method + "'");
    auto b = parse_backend(target);
    if (!b) config_error(line, "unknown target '" + target + "'");
    r.target = *b;
    for (const auto& prev : rules)
      if (prev.method == r.method)
        config_error(line, "second rule for '" + r.method + "' (first on line " + std::to_string(prev.line) + ")");
    rules.push_back(std::move(r));
  }
  return rules;
}

BackendChoice select_backend(const std::vector<BackendRule>& rules, const std::string& method,
                             const std::set<Backend>& available) {
  for (const auto& r : rules) {
    if (r.method != method) continue;
    if (available.count(r.target)) return {r.target, {}};
    return {Backend::Sm, std::string("backend ") + backend_name(r.target) + " requested for '" + method +
                             "' is not available; using sm"};
  }
  return {Backend::Sm, {}};
}

namespace {

class EngineHooks : public ExecHooks {
 public:
  EngineHooks(Engine& e, Backend b) : engine_(e), backend_(b) {}
  bool intercept_call(int method_index, std::vector<Value>& args, Value& out) override {
    const MethodDecl& m = engine_.program().methods[static_cast<std::size_t>(method_index)];
    if (!routes_(method_index, m)) return false;
    out = engine_.call(method_index, std::move(args), backend_);
    return true;
  }
  std::function<bool(int, const MethodDecl&)> routes_;

 private:
  Engine& engine_;
  Backend backend_;
};

}  // namespace

Engine::Engine(const Program& p, EngineOptions opt) : prog_(p), opt_(std::move(opt)) {
  available_ = {Backend::Seq, Backend::Sm};
  if (opt_.gpu_enabled) available_.insert(Backend::GpuSim);
  dev_ = std::make_unique<DeviceState>(opt_.gpu);
}

Engine::~Engine() = default;

int Engine::slaves() const {
  if (opt_.slaves > 0) return opt_.slaves;
  if (opt_.sm.workers > 0) return opt_.sm.workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

const ExecutionPlanSM& Engine::sm_plan(int method_index) {
  auto& slot = sm_plans_[method_index];
  if (!slot) slot = std::make_unique<ExecutionPlanSM>(lower_master_sm(prog_, method_index, slaves()));
  return *slot;
}

const ExecutionPlanGPU& Engine::gpu_plan(int method_index) {
  auto& slot = gpu_plans_[method_index];
  if (!slot) {
    slot = std::make_unique<ExecutionPlanGPU>(plan_gpu(prog_, method_index));
    for (const auto& w : slot->warnings)
      if (warned_.insert(w.format()).second) warnings_.push_back(w.format());
  }
  return *slot;
}

Backend Engine::backend_for(int method_index, Backend inherited) {
  const std::string& name = prog_.methods[static_cast<std::size_t>(method_index)].name;
  for (const auto& r : opt_.rules)
    if (r.method == name) {
      BackendChoice c = select_backend(opt_.rules, name, available_);
      if (!c.warning.empty() && warned_.insert(c.warning).second) warnings_.push_back(c.warning);
      return c.backend;
    }
  return inherited;
}

Value Engine::run(const std::string& method, std::vector<Value> args) {
  int idx = prog_.index_of(method);
  if (idx < 0) throw std::invalid_argument("no method named '" + method + "'");
  Backend b = opt_.force ? *opt_.force : backend_for(idx, Backend::Sm);
  if (!available_.count(b)) {
    std::string w = std::string("backend ") + backend_name(b) + " is not available; using sm";
    if (warned_.insert(w).second) warnings_.push_back(w);
    b = Backend::Sm;
  }
  switch (b) {
    case Backend::Seq:
      return run_seq(idx, std::move(args));
    case Backend::GpuSim:
      return run_on_gpu(idx, std::move(args), false);
    default:
      return run_sm(idx, std::move(args));
  }
}

Value Engine::call(int method_index, std::vector<Value> args, Backend inherited) {
  switch (backend_for(method_index, inherited)) {
    case Backend::Seq:
      return run_seq(method_index, std::move(args));
    case Backend::GpuSim:
      return run_on_gpu(method_index, std::move(args), false);
    default:
      return run_sm(method_index, std::move(args));
  }
}

Value Engine::run_seq(int method_index, std::vector<Value> args) {
  // Only calls with a rule of their own leave the sequential interpreter.
  EngineHooks hooks(*this, Backend::Seq);
  hooks.routes_ = [this](int, const MethodDecl& m) {
    for (const auto& r : opt_.rules)
      if (r.method == m.name) return true;
    return false;
  };
  Evaluator ev(prog_, &hooks);
  return ev.invoke(prog_.methods[static_cast<std::size_t>(method_index)], std::move(args));
}

Value Engine::run_sm(int method_index, std::vector<Value> args) {
  const MethodDecl& m = prog_.methods[static_cast<std::size_t>(method_index)];
  if (m.is_somd) return execute_sm(sm_plan(method_index), std::move(args), opt_.sm);
  EngineHooks hooks(*this, Backend::Sm);
  hooks.routes_ = [this](int, const MethodDecl& callee) {
    if (callee.is_somd) return true;
    for (const auto& r : opt_.rules)
      if (r.method == callee.name) return true;
    return false;
  };
  Evaluator ev(prog_, &hooks);
  return ev.invoke(m, std::move(args));
}

Value Engine::run_on_gpu(int method_index, std::vector<Value> args, bool nested) {
  GpuDispatcher dispatch = [this](int mi, std::vector<Value>& a, Value& out) {
    Backend b = backend_for(mi, Backend::GpuSim);
    if (b == Backend::GpuSim) return false;
    for (const auto& v : a) dev_->to_host(v);
    out = call(mi, std::move(a), b);
    dev_->forget_host_copies();
    return true;
  };
  return run_gpu(gpu_plan(method_index), std::move(args), *dev_, dispatch, !nested);
}

}  // namespace somd
