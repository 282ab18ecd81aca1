#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "somd/ast.hpp"
#include "somd/diagnostics.hpp"

namespace somd {

struct GridConfig {
  std::int64_t n_groups = 0;
  std::int64_t group_size = 1;
  std::int64_t total_threads = 0;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Groups of exactly `max_group_size` threads, enough of them to cover `problem_size`.
GridConfig grid_config(std::int64_t problem_size, std::int64_t max_group_size);

/// Array argument of a kernel. The kernel frame binds the flat device buffer at `slot`.
struct KernelBuffer {
  std::string name;
  int slot = -1;
  Type type;  // host type; rank-2 arrays are flattened row-major
  bool read = false;
  bool written = false;
  int rows_slot = -1;  // rank 2 only
  int cols_slot = -1;
};

/// Host scalar copied into the kernel at launch.
struct KernelScalar {
  std::string name;
  int slot = -1;
  Type type;
};

/// Host scalar accumulated by the loop: per-thread contributions, a tree reduction per group,
/// then a host fold of the group partials into `acc_slot`.
struct GroupReduce {
  Op op = Op::Add;  // Add (covers += and -=) or Mul
  int acc_slot = -1;
  std::string acc_name;
  int part_slot = -1;
  Type type;
  bool merged = false;  // same operator as the method's reduce(op)
  bool self = false;    // host fold re-invokes the method (reduce(self))
};

struct KernelIR {
  int id = -1;
  std::string origin;  // where the kernel came from, for dumps
  int dims = 1;        // 0: scalar kernel, only global id 0 does work
  int gid_slot = -1;
  int width_slot = -1;  // dims == 2: threads per grid row
  // Per grid dimension, host expressions whose maximum sizes that dimension: the extent of the
  // distributed dimension the loop walks (may be null) and the loop's upper bound.
  std::vector<std::pair<ExprPtr, ExprPtr>> span;
  std::vector<KernelBuffer> buffers;
  std::vector<KernelScalar> scalars;
  std::optional<GroupReduce> reduce;
  StmtPtr body;  // one thread's program, guards included
  int frame_size = 0;
};

struct TransferStep {
  enum class Kind { Put, Alloc, Get };
  Kind kind = Kind::Put;
  std::string buffer;
  int kernel = -1;
};

struct ExecutionPlanGPU {
  const Program* program = nullptr;
  int method_index = -1;
  std::shared_ptr<const MethodDecl> host;  // method body with launches in place of loops
  std::vector<KernelIR> kernels;
  std::vector<std::string> schedule;  // per kernel: how often the host launches it
  std::vector<TransferStep> transfers;
  std::optional<ReduceSpec> reduce;
  std::vector<Diagnostic> warnings;
  bool scalar_kernel = false;  // the whole method is kernel 0
  // Reduce-carrying SOMD callees, indexed by the AuxCall ids in `host`.
  std::vector<std::shared_ptr<const ExecutionPlanGPU>> aux;

  const MethodDecl& method() const { return *host; }
};

/// Kernel splitting, reduction split and transfer schedule for one method. `param_specs` gives
/// an auxiliary callee the distributions of the caller's arguments.
ExecutionPlanGPU plan_gpu(const Program& p, int method_index,
                          const std::vector<const DistSpec*>* param_specs = nullptr, int depth = 0);

/// Structured text of the host code, kernels, launches and transfers (`--emit-kernels`).
std::string print_kernels(const ExecutionPlanGPU& plan, std::int64_t max_group = 256);

}  // namespace somd
