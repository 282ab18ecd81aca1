#include <gtest/gtest.h>

#include <random>

#include "somd/interp.hpp"
#include "somd/partition.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

IndexRange R(std::int64_t lo, std::int64_t hi, std::int64_t vlo, std::int64_t vhi) { return {lo, hi, vlo, vhi}; }

// Independent statement of the block rule: rank r owns [r*q + min(r, rem), ...).
std::vector<std::pair<std::int64_t, std::int64_t>> block_oracle(std::int64_t n, int k) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::int64_t q = n / k, rem = n % k, lo = 0;
  for (int r = 0; r < k; ++r) {
    std::int64_t sz = q + (r < rem ? 1 : 0);
    out.emplace_back(lo, lo + sz);
    lo += sz;
  }
  return out;
}

}  // namespace

TEST(IndexPartition, SingleSlave) {
  auto p = index_partition(10, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], R(0, 10, 0, 10));
}

TEST(IndexPartition, ThreeWays) {
  auto p = index_partition(10, 3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], R(0, 4, 0, 4));
  EXPECT_EQ(p[1], R(4, 7, 4, 7));
  EXPECT_EQ(p[2], R(7, 10, 7, 10));
}

TEST(IndexPartition, ViewsClamped) {
  auto p = index_partition(10, 3, ViewPair{1, 1});
  EXPECT_EQ(p[0], R(0, 4, 0, 5));
  EXPECT_EQ(p[1], R(4, 7, 3, 8));
  EXPECT_EQ(p[2], R(7, 10, 6, 10));
}

TEST(IndexPartition, EmptyLength) {
  auto p = index_partition(0, 4);
  ASSERT_EQ(p.size(), 4u);
  for (const auto& r : p) {
    EXPECT_TRUE(r.empty());
    EXPECT_EQ(r.lo, 0);
  }
}

TEST(BlockBlock, FourByFour) {
  auto b = block_block_partition(4, 4, 4);
  EXPECT_EQ(b.grid.rows, 2);
  EXPECT_EQ(b.grid.cols, 2);
  std::vector<int> hits(16, 0);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(b.row_range(r).size(), 2);
    EXPECT_EQ(b.col_range(r).size(), 2);
    for (auto i = b.row_range(r).lo; i < b.row_range(r).hi; ++i)
      for (auto j = b.col_range(r).lo; j < b.col_range(r).hi; ++j) ++hits[static_cast<std::size_t>(i * 4 + j)];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(BlockBlock, OneSlaveClampedViews) {
  auto b = block_block_partition(6, 6, 1, {1, 1}, {1, 1});
  EXPECT_EQ(b.row_range(0), R(0, 6, 0, 6));
  EXPECT_EQ(b.col_range(0), R(0, 6, 0, 6));
}

TEST(BlockBlock, PrimeCount) {
  auto b = block_block_partition(5, 7, 3);
  EXPECT_EQ(b.grid.rows, 1);
  EXPECT_EQ(b.grid.cols, 3);
  ASSERT_EQ(b.dim2.size(), 3u);
  EXPECT_EQ(b.dim2[0].size(), 3);
  EXPECT_EQ(b.dim2[1].size(), 2);
  EXPECT_EQ(b.dim2[2].size(), 2);
  EXPECT_EQ(b.dim1[0].size(), 5);
}

TEST(FactorGrid, NearSquare) {
  EXPECT_EQ(factor_grid(1).rows, 1);
  EXPECT_EQ(factor_grid(8).rows, 2);
  EXPECT_EQ(factor_grid(8).cols, 4);
  EXPECT_EQ(factor_grid(12).rows, 3);
  EXPECT_EQ(factor_grid(16).rows, 4);
  EXPECT_EQ(factor_grid(7).rows, 1);
}

TEST(RowDisjoint, NeverSplitsARow) {
  auto p = row_disjoint_partition({0, 0, 1, 1, 1, 2}, 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].lo, 0);
  EXPECT_TRUE(p[0].hi == 2 || p[0].hi == 5);
  EXPECT_EQ(p[1].lo, p[0].hi);
  EXPECT_EQ(p[1].hi, 6);
}

TEST(RowDisjoint, SingleRow) {
  auto p = row_disjoint_partition({0}, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].lo, 0);
  EXPECT_EQ(p[0].hi, 1);
}

TEST(RowDisjoint, OneRowEach) {
  auto p = row_disjoint_partition({0, 1, 2, 3}, 4);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(p[static_cast<std::size_t>(r)].lo, r);
    EXPECT_EQ(p[static_cast<std::size_t>(r)].hi, r + 1);
  }
}

TEST(RowDisjoint, UnsortedRejected) {
  EXPECT_THROW(row_disjoint_partition({0, 2, 1}, 2), std::invalid_argument);
}

TEST(Reduction, PrimOpSum) {
  Value v = apply_reduction(ReduceSpec::prim(Op::Add), {Value::of_int(1), Value::of_int(2), Value::of_int(3)});
  EXPECT_EQ(v.i, 6);
}

TEST(Reduction, ArrayAssembly) {
  ReduceSpec spec;
  spec.kind = ReduceKind::ArrayAssembly;
  Value v = apply_reduction(spec, {ints({1, 2}), ints({3}), ints({4, 5})});
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{1, 2, 3, 4, 5}));
}

TEST(Reduction, AssemblySizeMismatch) {
  ReduceSpec spec;
  spec.kind = ReduceKind::ArrayAssembly;
  ReductionEnv env;
  env.expected_length = 4;
  EXPECT_ANY_THROW(apply_reduction(spec, {ints({1, 2}), ints({3})}, env));
}

TEST(Reduction, SelfWithSum) {
  Program p = compile(listing("sum"));
  ReduceSpec spec;
  spec.kind = ReduceKind::Self;
  ReductionEnv env;
  env.self = [&](const Value& partials) { return interpret(p, "sum", {partials}); };
  Value v = apply_reduction(spec, {Value::of_int(10), Value::of_int(20), Value::of_int(12)}, env);
  EXPECT_EQ(v.i, 42);
}

TEST(Reduction, UnregisteredUserReducer) {
  ReduceSpec spec;
  spec.kind = ReduceKind::User;
  spec.user_name = "Nope";
  ReductionEnv env;
  env.registry = &StrategyRegistry::defaults();
  EXPECT_ANY_THROW(apply_reduction(spec, {Value::of_int(1)}, env));
}

TEST(Reduction, ArraySumReducer) {
  ReduceSpec spec;
  spec.kind = ReduceKind::User;
  spec.user_name = "ArraySum";
  ReductionEnv env;
  env.registry = &StrategyRegistry::defaults();
  Value v = apply_reduction(spec, {dbls({1, 2}), dbls({10, 20})}, env);
  EXPECT_EQ(dbl_cells(v), (std::vector<double>{11, 22}));
}

// 10^4 randomized cases: coverage, disjointness, balance, clamped views, row-disjointness.
TEST(PartitionProperties, Randomized) {
  std::mt19937_64 rng(20261017);
  int violations = 0;
  for (int c = 0; c < 10000; ++c) {
    std::int64_t n = std::uniform_int_distribution<std::int64_t>(0, 10000)(rng);
    int k = std::uniform_int_distribution<int>(1, 64)(rng);
    ViewPair v{std::uniform_int_distribution<int>(0, 3)(rng), std::uniform_int_distribution<int>(0, 3)(rng)};
    auto p = index_partition(n, k, v);
    auto want = block_oracle(n, k);
    if (static_cast<int>(p.size()) != k) {
      ++violations;
      continue;
    }
    std::int64_t lo = 0, mn = n, mx = 0;
    for (int r = 0; r < k; ++r) {
      const auto& x = p[static_cast<std::size_t>(r)];
      if (x.lo != lo || x.hi < x.lo) ++violations;
      if (x.lo != want[static_cast<std::size_t>(r)].first || x.hi != want[static_cast<std::size_t>(r)].second) ++violations;
      if (x.view_lo < 0 || x.view_hi > n) ++violations;
      if (x.view_lo != std::max<std::int64_t>(0, x.lo - v.before) && !x.empty()) ++violations;
      if (x.view_hi != std::min<std::int64_t>(n, x.hi + v.after) && !x.empty()) ++violations;
      mn = std::min(mn, x.size());
      mx = std::max(mx, x.size());
      lo = x.hi;
    }
    if (lo != n) ++violations;
    if (mx - mn > 1) ++violations;

    // Compressed-row structure with random row lengths (some empty).
    int rows = std::uniform_int_distribution<int>(1, 200)(rng);
    std::vector<std::int64_t> row_index;
    for (int r = 0; r < rows; ++r) {
      int len = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int e = 0; e < len; ++e) row_index.push_back(r);
    }
    auto q = row_disjoint_partition(row_index, k);
    if (static_cast<int>(q.size()) != k) {
      ++violations;
      continue;
    }
    std::int64_t at = 0;
    for (const auto& x : q) {
      if (x.lo != at || x.hi < x.lo) ++violations;
      if (x.lo > 0 && x.lo < static_cast<std::int64_t>(row_index.size()) &&
          row_index[static_cast<std::size_t>(x.lo - 1)] == row_index[static_cast<std::size_t>(x.lo)])
        ++violations;
      at = x.hi;
    }
    if (at != static_cast<std::int64_t>(row_index.size())) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(PartitionProperties, ReductionDeterministic) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int c = 0; c < 200; ++c) {
    std::vector<Value> parts;
    for (int k = 0; k < 9; ++k) parts.push_back(Value::of_double(u(rng)));
    Value a = apply_reduction(ReduceSpec::prim(Op::Add), parts);
    Value b = apply_reduction(ReduceSpec::prim(Op::Add), parts);
    EXPECT_TRUE(values_equal(a, b));
  }
}

// Self over block partials equals the sequential method over the whole input.
TEST(PartitionProperties, SelfMatchesSequential) {
  Program p = compile(listing("sum"));
  std::mt19937_64 rng(11);
  for (int c = 0; c < 100; ++c) {
    std::int64_t n = std::uniform_int_distribution<std::int64_t>(0, 300)(rng);
    int k = std::uniform_int_distribution<int>(1, 9)(rng);
    std::vector<std::int64_t> data(static_cast<std::size_t>(n));
    for (auto& x : data) x = std::uniform_int_distribution<std::int64_t>(-1000, 1000)(rng);
    std::vector<Value> partials;
    for (const auto& r : index_partition(n, k))
      partials.push_back(interpret(p, "sum", {ints({data.begin() + r.lo, data.begin() + r.hi})}));
    ReduceSpec spec;
    spec.kind = ReduceKind::Self;
    ReductionEnv env;
    env.self = [&](const Value& v) { return interpret(p, "sum", {v}); };
    EXPECT_EQ(apply_reduction(spec, partials, env).i, interpret(p, "sum", {ints(data)}).i);
  }
}
