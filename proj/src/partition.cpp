#include "somd/partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "somd/interp.hpp"

namespace somd {

std::vector<IndexRange> index_partition(std::int64_t length, int n_slaves, ViewPair view) {
  if (length < 0) throw std::invalid_argument("negative length");
  if (n_slaves < 1) throw std::invalid_argument("n_slaves must be positive");
  std::vector<IndexRange> out(static_cast<std::size_t>(n_slaves));
  std::int64_t base = length / n_slaves;
  std::int64_t rem = length % n_slaves;
  for (int k = 0; k < n_slaves; ++k) {
    IndexRange& r = out[static_cast<std::size_t>(k)];
    r.lo = k * base + std::min<std::int64_t>(k, rem);
    r.hi = r.lo + base + (k < rem ? 1 : 0);
    r.view_lo = std::max<std::int64_t>(0, r.lo - view.before);
    r.view_hi = std::min<std::int64_t>(length, r.hi + view.after);
    if (r.view_lo > r.lo) r.view_lo = r.lo;
    if (r.view_hi < r.hi) r.view_hi = r.hi;
  }
  return out;
}

GridShape factor_grid(int n_slaves) {
  if (n_slaves < 1) throw std::invalid_argument("n_slaves must be positive");
  int r = static_cast<int>(std::sqrt(static_cast<double>(n_slaves)));
  while (r * r > n_slaves) --r;
  while ((r + 1) * (r + 1) <= n_slaves) ++r;
  while (n_slaves % r != 0) --r;
  return {r, n_slaves / r};
}

BlockPartition block_block_partition(std::int64_t rows, std::int64_t cols, int n_slaves,
                                     ViewPair view1, ViewPair view2) {
  BlockPartition bp;
  bp.grid = factor_grid(n_slaves);
  bp.dim1 = index_partition(rows, bp.grid.rows, view1);
  bp.dim2 = index_partition(cols, bp.grid.cols, view2);
  return bp;
}

std::vector<IndexRange> row_disjoint_partition(const std::vector<std::int64_t>& row_index,
                                               int n_slaves) {
  if (n_slaves < 1) throw std::invalid_argument("n_slaves must be positive");
  auto m = static_cast<std::int64_t>(row_index.size());
  if (!std::is_sorted(row_index.begin(), row_index.end()))
    throw std::invalid_argument("row index must be sorted");

  // Positions where a new row starts, plus both ends.
  std::vector<std::int64_t> cuts{0};
  for (std::int64_t k = 1; k < m; ++k)
    if (row_index[static_cast<std::size_t>(k)] != row_index[static_cast<std::size_t>(k - 1)]) cuts.push_back(k);
  if (m > 0) cuts.push_back(m);

  std::vector<std::int64_t> bounds{0};
  for (int k = 1; k < n_slaves; ++k) {
    double target = static_cast<double>(m) * k / n_slaves;
    auto it = std::lower_bound(cuts.begin(), cuts.end(), static_cast<std::int64_t>(std::ceil(target)));
    std::int64_t best = it == cuts.end() ? cuts.back() : *it;
    if (it != cuts.begin()) {
      std::int64_t below = *std::prev(it);
      if (target - static_cast<double>(below) <= static_cast<double>(best) - target) best = below;
    }
    bounds.push_back(std::max(best, bounds.back()));
  }
  bounds.push_back(m);

  std::vector<IndexRange> out;
  for (int k = 0; k < n_slaves; ++k) {
    IndexRange r;
    r.lo = r.view_lo = bounds[static_cast<std::size_t>(k)];
    r.hi = r.view_hi = bounds[static_cast<std::size_t>(k + 1)];
    out.push_back(r);
  }
  return out;
}

void StrategyRegistry::add_partitioner(const std::string& name, PartitionerFn fn) {
  partitioners_[name] = std::move(fn);
}

void StrategyRegistry::add_reducer(const std::string& name, ReducerFn fn) {
  reducers_[name] = std::move(fn);
}

const PartitionerFn* StrategyRegistry::partitioner(const std::string& name) const {
  auto it = partitioners_.find(name);
  return it == partitioners_.end() ? nullptr : &it->second;
}

const ReducerFn* StrategyRegistry::reducer(const std::string& name) const {
  auto it = reducers_.find(name);
  return it == reducers_.end() ? nullptr : &it->second;
}

namespace {

Value add_values(const Value& a, const Value& b) {
  if (!a.is_array()) return apply_binary(Op::Add, a, b);
  const Array& x = *a.arr;
  const Array& y = *b.arr;
  if (x.length() != y.length()) throw std::invalid_argument("ArraySum: partial lengths differ");
  if (x.rank == 2) {
    auto out = Array::make2(x.elem, x.length(), -1);
    for (std::size_t r = 0; r < x.rows.size(); ++r)
      out->rows[r] = add_values(Value::of_array(x.rows[r]), Value::of_array(y.rows[r])).arr;
    return Value::of_array(out);
  }
  auto out = Array::make(x.elem, x.length());
  for (std::int64_t k = 0; k < x.length(); ++k) out->set(k, apply_binary(Op::Add, x.get(k), y.get(k)));
  return Value::of_array(out);
}

StrategyRegistry make_defaults() {
  StrategyRegistry reg;
  reg.add_partitioner("RowDisjoint", [](std::int64_t length, int n, const std::vector<Value>& args) {
    if (args.size() != 1 || !args[0].is_array() || !args[0].arr || args[0].arr->rank != 1)
      throw std::invalid_argument("RowDisjoint expects the row index array as its argument");
    const Array& rows = *args[0].arr;
    if (rows.length() != length)
      throw std::invalid_argument("RowDisjoint: row index length differs from the distributed length");
    return row_disjoint_partition(rows.ints, n);
  });
  reg.add_reducer("ArraySum", [](const std::vector<Value>& partials, const std::vector<Value>&) {
    Value acc = partials.at(0);
    for (std::size_t k = 1; k < partials.size(); ++k) acc = add_values(acc, partials[k]);
    return acc;
  });
  return reg;
}

}  // namespace

const StrategyRegistry& StrategyRegistry::defaults() {
  static const StrategyRegistry reg = make_defaults();
  return reg;
}

std::vector<IndexRange> run_partitioner(const StrategyRegistry& reg, const std::string& name,
                                        std::int64_t length, int n_slaves,
                                        const std::vector<Value>& args) {
  const PartitionerFn* fn = reg.partitioner(name);
  if (!fn) throw std::invalid_argument("unregistered partitioner " + name);
  std::vector<IndexRange> out = (*fn)(length, n_slaves, args);
  if (static_cast<int>(out.size()) != n_slaves)
    throw std::runtime_error("partitioner " + name + " returned the wrong number of ranges");
  std::int64_t expect = 0;
  for (const auto& r : out) {
    if (r.lo != expect || r.hi < r.lo)
      throw std::runtime_error("partitioner " + name + " returned ranges that do not tile the input");
    expect = r.hi;
  }
  if (expect != length) throw std::runtime_error("partitioner " + name + " does not cover the input");
  return out;
}

Value assemble(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to assemble");
  const Array* first = nullptr;
  std::int64_t total = 0;
  for (const auto& p : parts) {
    if (!p.is_array() || !p.arr) throw std::invalid_argument("array assembly over a non-array partial");
    if (!first) first = p.arr.get();
    if (p.arr->rank != first->rank || p.arr->elem != first->elem)
      throw std::invalid_argument("array assembly over partials of different types");
    total += p.arr->length();
  }
  if (first->rank == 2) {
    auto out = Array::make2(first->elem, 0, -1);
    out->rows.reserve(static_cast<std::size_t>(total));
    for (const auto& p : parts)
      for (const auto& r : p.arr->rows) out->rows.push_back(r);
    return Value::of_array(out);
  }
  auto out = std::make_shared<Array>();
  out->elem = first->elem;
  for (const auto& p : parts) {
    if (first->elem == BaseType::Double)
      out->dbls.insert(out->dbls.end(), p.arr->dbls.begin(), p.arr->dbls.end());
    else
      out->ints.insert(out->ints.end(), p.arr->ints.begin(), p.arr->ints.end());
  }
  return Value::of_array(out);
}

Value assemble_blocks(const std::vector<Value>& parts, const std::vector<std::int64_t>& row_offsets,
                      const std::vector<std::int64_t>& col_offsets, std::int64_t rows,
                      std::int64_t cols, BaseType elem) {
  auto out = Array::make2(elem, rows, cols);
  std::vector<int> covered(static_cast<std::size_t>(rows * cols), 0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& b = *parts[k].arr;
    for (std::int64_t i = 0; i < b.length(); ++i) {
      const Array& row = *b.rows[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < row.length(); ++j) {
        std::int64_t gi = row_offsets[k] + i;
        std::int64_t gj = col_offsets[k] + j;
        if (gi >= rows || gj >= cols) throw std::invalid_argument("block partial exceeds the result");
        out->rows[static_cast<std::size_t>(gi)]->set(gj, row.get(j));
        ++covered[static_cast<std::size_t>(gi * cols + gj)];
      }
    }
  }
  for (int c : covered)
    if (c != 1) throw std::invalid_argument("block partials do not tile the result");
  return Value::of_array(out);
}

Value apply_reduction(const ReduceSpec& spec, const std::vector<Value>& partials,
                      const ReductionEnv& env) {
  if (partials.empty()) throw std::invalid_argument("reduction over no partial results");
  switch (spec.kind) {
    case ReduceKind::PrimOp: {
      Value acc = partials[0];
      for (std::size_t k = 1; k < partials.size(); ++k) acc = apply_binary(spec.op, acc, partials[k]);
      return acc;
    }
    case ReduceKind::ArrayAssembly: {
      Value out = assemble(partials);
      if (env.expected_length >= 0 && out.arr->length() != env.expected_length)
        throw std::invalid_argument("assembled length " + std::to_string(out.arr->length()) +
                                    " differs from the input length " + std::to_string(env.expected_length));
      return out;
    }
    case ReduceKind::Self: {
      if (!env.self) throw std::invalid_argument("self reduction needs its method");
      const Value& p0 = partials[0];
      ArrayPtr arr = Array::make(base_of(p0), static_cast<std::int64_t>(partials.size()));
      for (std::size_t k = 0; k < partials.size(); ++k) arr->set(static_cast<std::int64_t>(k), partials[k]);
      return env.self(Value::of_array(arr));
    }
    case ReduceKind::User: {
      const StrategyRegistry& reg = env.registry ? *env.registry : StrategyRegistry::defaults();
      const ReducerFn* fn = reg.reducer(spec.user_name);
      if (!fn) throw std::invalid_argument("unregistered reducer " + spec.user_name);
      return (*fn)(partials, env.user_args);
    }
  }
  throw std::logic_error("unknown reduction kind");
}

}  // namespace somd
