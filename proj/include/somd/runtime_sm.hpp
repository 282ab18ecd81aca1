#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "somd/partition.hpp"
#include "somd/plan_sm.hpp"
#include "somd/value.hpp"

namespace somd {

class ThreadPool;

struct SmOptions {
  int workers = 0;                  // 0: hardware concurrency (process-wide pool)
  std::uint64_t stress_seed = 0;    // non-zero: randomized submission order and delays
  std::chrono::milliseconds watchdog{30000};  // 0: wait forever
  bool check_access = false;        // owner-write / view-read checks on distributed arrays
  const StrategyRegistry* registry = nullptr;
};

/// The watchdog fired: some party never reached a barrier.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-invocation counters, filled when `stats` is passed to execute_sm.
struct SmStats {
  int fence_phases = 0;
  int intermediate_reductions = 0;
  std::vector<std::vector<IndexRange>> ranges;  // [dist_id][rank], dimension 1
};

/// Runs the plan on n_slaves MIs and returns the reduced result. Synchronous for the caller.
Value execute_sm(const ExecutionPlanSM& plan, std::vector<Value> args, const SmOptions& opt = {},
                 SmStats* stats = nullptr);

}  // namespace somd
