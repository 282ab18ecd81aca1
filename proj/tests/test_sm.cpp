#include <gtest/gtest.h>

#include <cmath>

#include "somd/corpus.hpp"
#include "somd/interp.hpp"
#include "somd/plan_sm.hpp"
#include "somd/printer.hpp"
#include "somd/runtime_sm.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

ExecutionPlanSM plan_of(const Program& p, const std::string& m, int n) { return lower_master_sm(p, p.index_of(m), n); }

const char* kSyncOps = R"(
reduce(+)
int addAll(dist int[] a) {
  shared int s = 0;
  sync reduce(+) (s) {
    for (int i = 0; i < a.length; i++) s += a[i];
  }
  return s;
}

reduce(+)
int mulAll(dist int[] a) {
  shared int s = 1;
  sync reduce(*) (s) {
    for (int i = 0; i < a.length; i++) s *= a[i];
  }
  return s + 1;
}

reduce(+)
int plain(int x) {
  int y = x + 1;
  return y;
}
)";

}  // namespace

TEST(PlanSm, StencilGolden) {
  Program p = compile(listing("stencil"));
  std::string got = print_plan(plan_of(p, "stencil", 8));
  std::string want = read_file(std::string(SOMD_TEST_DIR) + "/golden/stencil_plan_n8.txt");
  EXPECT_EQ(got, want);
}

TEST(PlanSm, StencilStructure) {
  Program p = compile(listing("stencil"));
  auto plan = plan_of(p, "stencil", 8);
  const auto& parts = plan.slave->partitions;
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].dims, (std::vector<int>{1, 2}));
  EXPECT_EQ(parts[0].spec->halo(1), (ViewPair{1, 1}));
  EXPECT_EQ(parts[0].spec->halo(2), (ViewPair{1, 1}));
  ASSERT_TRUE(plan.slave->reduce.has_value());
  EXPECT_EQ(plan.slave->reduce->kind, ReduceKind::PrimOp);
  EXPECT_TRUE(plan.slave->barriers);

  std::string text = print_plan(plan);
  EXPECT_NE(text.find("new Phaser(nSlaves);"), std::string::npos);
  EXPECT_NE(text.find("new Phaser(nSlaves + 1);"), std::string::npos);
  EXPECT_NE(text.find("results[rank] = Gtotal;"), std::string::npos);
  EXPECT_NE(text.find("Math.max(1, G_1[0]); i < Math.min(G.length - 1, G_1[1])"), std::string::npos);
}

TEST(PlanSm, VectorAdd) {
  Program p = compile(listing("vectoradd"));
  auto plan = plan_of(p, "vectorAdd", 4);
  EXPECT_EQ(plan.n_slaves, 4);
  ASSERT_EQ(plan.slave->partitions.size(), 2u);
  EXPECT_EQ(plan.slave->partitions[0].name, "a");
  EXPECT_EQ(plan.slave->partitions[1].name, "b");
  ASSERT_TRUE(plan.slave->reduce.has_value());
  EXPECT_EQ(plan.slave->reduce->kind, ReduceKind::ArrayAssembly);
  std::string text = print_plan(plan);
  EXPECT_NE(text.find("for (int i = a_1[0]; i < a_1[1]; i++)"), std::string::npos) << text;
}

TEST(PlanSm, SumOneSlave) {
  Program p = compile(listing("sum"));
  auto plan = plan_of(p, "sum", 1);
  EXPECT_EQ(plan.n_slaves, 1);
  ASSERT_TRUE(plan.slave->reduce.has_value());
  EXPECT_EQ(plan.slave->reduce->kind, ReduceKind::Self);
  EXPECT_EQ(execute_sm(plan, {ints({4, 5, 6})}).i, 15);
}

TEST(PlanSm, NoDistValuesOnlyReturnRewritten) {
  Program p = compile(kSyncOps);
  std::string text = print_plan(plan_of(p, "plain", 2));
  EXPECT_NE(text.find("  int y = x + 1;\n  results[rank] = y;\n  completed.advance();"), std::string::npos) << text;
}

TEST(RuntimeSm, VectorAdd) {
  Program p = compile(listing("vectoradd"));
  Value v = execute_sm(plan_of(p, "vectorAdd", 2), {ints({1, 2, 3, 4}), ints({10, 20, 30, 40})});
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{11, 22, 33, 44}));
}

TEST(RuntimeSm, SumOneToHundred) {
  Program p = compile(listing("sum"));
  std::vector<std::int64_t> a;
  for (int k = 1; k <= 100; ++k) a.push_back(k);
  EXPECT_EQ(execute_sm(plan_of(p, "sum", 4), {ints(a)}).i, 5050);
}

TEST(RuntimeSm, NormalizeDoubles) {
  Program p = compile(R"(
double[] normalize(dist double[] a) {
  shared double norm = 0;
  sync reduce(+) (norm) {
    for (int i = 0; i < a.length; i++) norm += a[i] * a[i];
  }
  norm = Math.sqrt(norm);
  for (int i = 0; i < a.length; i++) a[i] = a[i] / norm;
  return a;
}
)");
  SmStats stats;
  Value in = dbls({3, 4});
  Value v = execute_sm(plan_of(p, "normalize", 2), {in}, {}, &stats);
  ASSERT_EQ(v.arr->length(), 2);
  EXPECT_NEAR(v.arr->dbls[0], 0.6, 1e-15);
  EXPECT_NEAR(v.arr->dbls[1], 0.8, 1e-15);
  EXPECT_EQ(stats.intermediate_reductions, 1);
  // Caller's array is not mutated.
  EXPECT_EQ(dbl_cells(in), (std::vector<double>{3, 4}));
}

TEST(RuntimeSm, IntListingNormalizeMatchesOracle) {
  Program p = compile(listing("normalize"));
  Value seq = interpret(p, "normalize", {ints({3, 4})});
  Value sm = execute_sm(plan_of(p, "normalize", 2), {ints({3, 4})});
  EXPECT_TRUE(values_equal(seq, sm));
}

TEST(RuntimeSm, NestedSumProd) {
  Program p = compile(listing("norm"));
  Value v = execute_sm(plan_of(p, "norm", 3), {ints({1, 2, 2})});
  EXPECT_TRUE(values_equal(v, interpret(p, "norm", {ints({1, 2, 2})})));

  // Same shape over doubles: every instance must see sumProd = 9.
  Program q = compile(R"(
double[] norm(dist double[] a) {
  double norm = Math.sqrt(sumProd(a));
  for (int i = 0; i < a.length; i++) a[i] = a[i] / norm;
  return a;
}

reduce(+)
double sumProd(double[] a) {
  double sumProd = 0;
  for (int i = 0; i < a.length; i++) sumProd += a[i] * a[i];
  return sumProd;
}
)");
  Value w = execute_sm(plan_of(q, "norm", 3), {dbls({1, 2, 2})});
  EXPECT_EQ(dbl_cells(w), (std::vector<double>{1.0 / 3, 2.0 / 3, 2.0 / 3}));
}

TEST(RuntimeSm, SyncCombineAdd) {
  Program p = compile(kSyncOps);
  // Every instance sees 6; the method's reduce(+) then adds three copies.
  EXPECT_EQ(execute_sm(plan_of(p, "addAll", 3), {ints({1, 2, 3})}).i, 18);
}

TEST(RuntimeSm, SyncCombineMulAbsorbs) {
  Program p = compile(kSyncOps);
  EXPECT_EQ(execute_sm(plan_of(p, "mulAll", 3), {ints({2, 0, 3})}).i, 3);
  EXPECT_EQ(execute_sm(plan_of(p, "mulAll", 3), {ints({2, 5, 3})}).i, 93);
}

TEST(RuntimeSm, MoreSlavesThanElements) {
  Program p = compile(listing("vectoradd"));
  Value v = execute_sm(plan_of(p, "vectorAdd", 8), {ints({1, 2, 3}), ints({1, 1, 1})});
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{2, 3, 4}));
}

TEST(RuntimeSm, RangesReported) {
  Program p = compile(listing("sum"));
  SmStats stats;
  execute_sm(plan_of(p, "sum", 3), {ints({1, 2, 3, 4, 5, 6, 7, 8, 9, 10})}, {}, &stats);
  ASSERT_EQ(stats.ranges.size(), 1u);
  ASSERT_EQ(stats.ranges[0].size(), 3u);
  EXPECT_EQ(stats.ranges[0][0].hi, 4);
  EXPECT_EQ(stats.ranges[0][2].lo, 7);
}

TEST(RuntimeSm, StressSeedsAgree) {
  const CorpusProgram* c = find_corpus("sor");
  const Program& p = corpus_program(*c);
  auto plan = plan_of(p, c->entry, 4);
  auto args = c->make_args(GenConfig{9, 6, 3});
  Value want = interpret(p, c->entry, deep(args));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SmOptions opt;
    opt.stress_seed = seed;
    opt.workers = 4;
    Value v = execute_sm(plan, deep(args), opt);
    EXPECT_TRUE(values_close(v, want, 1e-12)) << "seed " << seed;
  }
}

TEST(RuntimeSm, AccessChecksPassOnListings) {
  Program p = compile(listing("vectoradd"));
  SmOptions opt;
  opt.check_access = true;
  Value v = execute_sm(plan_of(p, "vectorAdd", 3), {ints({1, 2, 3, 4, 5}), ints({1, 1, 1, 1, 1})}, opt);
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{2, 3, 4, 5, 6}));
}
