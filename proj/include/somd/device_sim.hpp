#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "somd/interp.hpp"
#include "somd/partition.hpp"
#include "somd/plan_gpu.hpp"
#include "somd/value.hpp"

namespace somd {

struct DeviceOptions {
  std::int64_t max_group = 256;
  std::uint64_t seed = 0;      // non-zero: shuffled group execution order
  bool strict_hazards = false;  // throw HazardError instead of recording
  bool track_hazards = true;
  bool force_f32 = false;  // round doubles to single precision on the device
  const StrategyRegistry* registry = nullptr;
};

struct TransferRecord {
  bool to_device = true;
  int buffer = -1;
  std::string name;
  std::int64_t bytes = 0;
  int launch_index = 0;  // launches issued before this transfer
};

struct LaunchRecord {
  int kernel = -1;
  std::string method;
  std::string origin;
  GridConfig grid;
  std::int64_t problem = 0;
};

/// A buffer cell touched by two different work groups in one launch, at least once as a write.
struct HazardRecord {
  int launch = -1;
  std::string buffer;
  std::int64_t cell = 0;
  std::int64_t writer_group = -1;
  std::int64_t other_group = -1;
};

/// Out-of-bounds or arithmetic failure inside a kernel.
class DeviceFault : public std::runtime_error {
 public:
  DeviceFault(std::int64_t gid, const std::string& what)
      : std::runtime_error("device fault in thread " + std::to_string(gid) + ": " + what), gid_(gid) {}
  std::int64_t gid() const { return gid_; }

 private:
  std::int64_t gid_;
};

class HazardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lets the caller route calls made by host code (SOMD callees, other backends).
/// Returns true when it produced `out`.
using GpuDispatcher = std::function<bool(int method_index, std::vector<Value>& args, Value& out)>;

/// Simulated device memory plus the transfer and launch ledger.
class DeviceState {
 public:
  explicit DeviceState(DeviceOptions opt = {});
  ~DeviceState();
  DeviceState(const DeviceState&) = delete;
  DeviceState& operator=(const DeviceState&) = delete;

  const DeviceOptions& options() const { return opt_; }
  const std::vector<TransferRecord>& transfers() const { return transfers_; }
  const std::vector<LaunchRecord>& launches() const { return launches_; }
  const std::vector<HazardRecord>& hazards() const { return hazards_; }
  void clear_ledger();

  /// Brings a device-modified array (or the array holding this row) back to the host.
  void to_host(const Value& v);
  /// Host memory was changed behind the device's back: re-copy before the next use.
  void forget_host_copies();

  // Used by the host-side hooks.
  void host_alloc(const ArrayPtr& a);
  void host_access(const Array* root, std::int64_t j, bool write);
  /// Runs kernel `k` against the host frame; returns what a scalar kernel wrote as its result.
  Value launch(const ExecutionPlanGPU& plan, const KernelIR& k, Frame& host, Evaluator& host_eval);
  Value launch_scalar(const ExecutionPlanGPU& plan, std::vector<Value> args);
  /// Plan for a SOMD method called from host code when no dispatcher handles it.
  const ExecutionPlanGPU& plan_for(const Program& p, int method_index);

 private:
  struct Entry;
  Entry* find(const Array* a);
  Entry& entry_for(const ArrayPtr& a, const std::string& name);
  ArrayPtr acquire(const ArrayPtr& host, const std::string& name);
  void put(Entry& e);
  void get(Entry& e);
  void record(bool to_device, const Entry& e, std::int64_t cells, BaseType elem);
  double round(double d) const;
  Value run_kernel(const ExecutionPlanGPU& plan, const KernelIR& k, Frame& kf, std::int64_t problem);

  DeviceOptions opt_;
  std::map<const Array*, std::unique_ptr<Entry>> entries_;
  std::map<const Array*, const Array*> row_parent_;
  std::vector<TransferRecord> transfers_;
  std::vector<LaunchRecord> launches_;
  std::vector<HazardRecord> hazards_;
  int next_buffer_ = 0;
  std::size_t sweep_at_ = 1024;
  std::map<std::pair<const Program*, int>, std::unique_ptr<ExecutionPlanGPU>> plans_;
};

/// Transfers, launches and hazards as a JSON document (`--ledger-json`).
std::string ledger_json(const DeviceState& dev);

/// Runs one method on the simulated device. With `fetch_result` the returned array is copied
/// back to the host before returning.
Value run_gpu(const ExecutionPlanGPU& plan, std::vector<Value> args, DeviceState& dev,
              const GpuDispatcher& dispatch = {}, bool fetch_result = true);

}  // namespace somd
