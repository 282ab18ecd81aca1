#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "somd/ast.hpp"
#include "somd/value.hpp"

namespace somd {

/// Owned index range [lo, hi) and the visible window [view_lo, view_hi) around it.
struct IndexRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t view_lo = 0;
  std::int64_t view_hi = 0;

  std::int64_t size() const { return hi - lo; }
  bool empty() const { return hi <= lo; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Block partition of [0, length): the first length % n_slaves ranges get one extra element.
/// Windows extend each range by the view and are clamped to [0, length).
std::vector<IndexRange> index_partition(std::int64_t length, int n_slaves, ViewPair view = {});

struct GridShape {
  int rows = 1;
  int cols = 1;
};

/// rows = largest divisor of n not above floor(sqrt(n)), cols = n / rows.
GridShape factor_grid(int n_slaves);

struct BlockPartition {
  GridShape grid;
  std::vector<IndexRange> dim1;  // grid.rows entries
  std::vector<IndexRange> dim2;  // grid.cols entries
  /// Block of a rank: (dim1[rank / cols], dim2[rank % cols]).
  IndexRange row_range(int rank) const { return dim1[static_cast<std::size_t>(rank / grid.cols)]; }
  IndexRange col_range(int rank) const { return dim2[static_cast<std::size_t>(rank % grid.cols)]; }
};

BlockPartition block_block_partition(std::int64_t rows, std::int64_t cols, int n_slaves,
                                     ViewPair view1 = {}, ViewPair view2 = {});

/// Splits the element index space of a compressed-row structure into n_slaves contiguous
/// ranges whose boundaries fall on row boundaries, as close as possible to an even split.
/// Throws std::invalid_argument when `row_index` is not sorted.
std::vector<IndexRange> row_disjoint_partition(const std::vector<std::int64_t>& row_index,
                                               int n_slaves);

/// A user partitioner maps (dimension length, n_slaves, evaluated args) to n_slaves ranges.
using PartitionerFn =
    std::function<std::vector<IndexRange>(std::int64_t length, int n_slaves, const std::vector<Value>& args)>;
/// A user reducer maps rank-ordered partial results (plus evaluated args) to one result.
using ReducerFn =
    std::function<Value(const std::vector<Value>& partials, const std::vector<Value>& args)>;

/// Name-keyed strategy registry. Filled at startup, read-only afterwards.
class StrategyRegistry {
 public:
  void add_partitioner(const std::string& name, PartitionerFn fn);
  void add_reducer(const std::string& name, ReducerFn fn);
  const PartitionerFn* partitioner(const std::string& name) const;
  const ReducerFn* reducer(const std::string& name) const;

  /// Registry holding the stock plugins: RowDisjoint (partitioner) and ArraySum (reducer).
  static const StrategyRegistry& defaults();

 private:
  std::map<std::string, PartitionerFn> partitioners_;
  std::map<std::string, ReducerFn> reducers_;
};

/// Runs a registered partitioner and checks that its output covers [0, length) in order.
std::vector<IndexRange> run_partitioner(const StrategyRegistry& reg, const std::string& name,
                                        std::int64_t length, int n_slaves,
                                        const std::vector<Value>& args);

struct ReductionEnv {
  const StrategyRegistry* registry = nullptr;
  std::vector<Value> user_args;
  /// Re-invokes the reducing method with the partials as its distributed input (Self).
  std::function<Value(const Value& partials)> self;
  /// Expected assembled length, or -1 when unknown.
  std::int64_t expected_length = -1;
};

/// Combines rank-ordered partials. PrimOp folds left to right; ArrayAssembly concatenates.
Value apply_reduction(const ReduceSpec& spec, const std::vector<Value>& partials,
                      const ReductionEnv& env = {});

/// Concatenates rank-ordered arrays (rows for rank-2 arrays).
Value assemble(const std::vector<Value>& parts);

/// Places 2D block partials at their offsets in a rows x cols result.
Value assemble_blocks(const std::vector<Value>& parts, const std::vector<std::int64_t>& row_offsets,
                      const std::vector<std::int64_t>& col_offsets, std::int64_t rows,
                      std::int64_t cols, BaseType elem);

}  // namespace somd
