#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "somd/device_sim.hpp"
#include "somd/plan_gpu.hpp"
#include "somd/plan_sm.hpp"
#include "somd/runtime_sm.hpp"

namespace somd {

enum class Backend { Seq, Sm, GpuSim, Cluster };

const char* backend_name(Backend b);
std::optional<Backend> parse_backend(const std::string& s);

/// `Qualifier.method:target`. The qualifier is kept for display only; methods are global.
struct BackendRule {
  std::string qualifier;
  std::string method;
  Backend target = Backend::Sm;
  int line = 0;
};

/// Parses a rule file. Throws CompileError with CONFIG_ERROR and the offending line.
std::vector<BackendRule> parse_backend_rules(const std::string& text);

struct BackendChoice {
  Backend backend = Backend::Sm;
  std::string warning;  // set when a rule could not be honoured
};

/// Rule target when it is available, otherwise the shared-memory default.
BackendChoice select_backend(const std::vector<BackendRule>& rules, const std::string& method,
                             const std::set<Backend>& available);

struct EngineOptions {
  std::vector<BackendRule> rules;
  std::optional<Backend> force;  // overrides the rules for the entry call only
  int slaves = 0;                // 0: one per worker
  SmOptions sm;
  DeviceOptions gpu;
  bool gpu_enabled = true;
};

/// Runs methods of one program, routing every SOMD call to its selected backend.
class Engine {
 public:
  Engine(const Program& p, EngineOptions opt);
  ~Engine();

  Value run(const std::string& method, std::vector<Value> args);
  Value call(int method_index, std::vector<Value> args, Backend inherited);

  const Program& program() const { return prog_; }
  DeviceState& device() { return *dev_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  int slaves() const;
  const std::set<Backend>& available() const { return available_; }

  const ExecutionPlanSM& sm_plan(int method_index);
  const ExecutionPlanGPU& gpu_plan(int method_index);

 private:
  Backend backend_for(int method_index, Backend inherited);
  Value run_seq(int method_index, std::vector<Value> args);
  Value run_sm(int method_index, std::vector<Value> args);
  Value run_on_gpu(int method_index, std::vector<Value> args, bool nested);

  const Program& prog_;
  EngineOptions opt_;
  std::set<Backend> available_;
  std::unique_ptr<DeviceState> dev_;
  std::map<int, std::unique_ptr<ExecutionPlanSM>> sm_plans_;
  std::map<int, std::unique_ptr<ExecutionPlanGPU>> gpu_plans_;
  std::vector<std::string> warnings_;
  std::set<std::string> warned_;
  int gpu_depth_ = 0;
};

}  // namespace somd
