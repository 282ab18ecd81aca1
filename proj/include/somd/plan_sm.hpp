#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "somd/analysis.hpp"
#include "somd/ast.hpp"

namespace somd {

/// How one distributed value is split across the MIs.
struct PartitionCall {
  int dist_id = -1;
  std::string name;
  int slot = -1;
  int param_index = -1;  // -1 for distributed locals
  Type type;
  const DistSpec* spec = nullptr;
  std::vector<int> dims;       // partitioned dimensions, 1-based, ascending
  bool written = false;        // elements are assigned by the method
  const Stmt* decl = nullptr;  // locals: declaration holding the `new` initializer

  bool partitions(int d) const;
};

struct SharedSlot {
  std::string name;
  Type type;
  int slot = -1;
  const Expr* init = nullptr;
};

struct SlaveProgram;

/// Call to a reduce-carrying auxiliary method from inside a SOMD method.
struct AuxSite {
  int aux_id = -1;
  int method_index = -1;
  std::vector<int> arg_dist;  // per callee parameter: caller dist id passed there, or -1
  std::shared_ptr<const SlaveProgram> callee;
};

/// Lowered form of one SOMD method: partition descriptors plus the rewritten MI body.
struct SlaveProgram {
  std::shared_ptr<const MethodDecl> method;  // own copy; aux callees carry the caller's specs
  int method_index = -1;
  MethodInfo info;
  std::vector<PartitionCall> partitions;
  std::vector<SharedSlot> shared;
  std::vector<AuxSite> aux;
  StmtPtr body;
  std::optional<ReduceSpec> reduce;  // effective reduction
  bool barriers = false;             // uses the fence, directly or through an aux call
};

struct ExecutionPlanSM {
  const Program* program = nullptr;
  int n_slaves = 1;
  std::shared_ptr<const SlaveProgram> slave;

  const MethodDecl& method() const { return *slave->method; }
};

/// Inputs of the slave rewrite.
struct SlaveEnv {
  const MethodInfo* info = nullptr;
  std::map<const Expr*, int> aux_ids;  // call node -> aux site
  Type return_type;
};

/// Rewrites a method body into MI code: returns write the results vector, syncs end in a
/// fence, distributed loops are clamped to the MI's range, shared declarations disappear.
StmtPtr transform_slave(const Stmt& body, const SlaveEnv& env);

/// Lowers method `method_index`. `param_specs` (aux callees only) supplies, per parameter, the
/// caller's distribution for arguments that are distributed values of the caller.
std::shared_ptr<SlaveProgram> lower_slave(const Program& p, int method_index,
                                          const std::vector<const DistSpec*>* param_specs = nullptr,
                                          int depth = 0);

/// Throws CompileError (PLAN_ERROR) for methods that cannot be lowered.
ExecutionPlanSM lower_master_sm(const Program& p, int method_index, int n_slaves);

/// Structured text of the master and slave code, used by `--emit-plan`.
std::string print_plan(const ExecutionPlanSM& plan);

}  // namespace somd
