#include <gtest/gtest.h>

#include <random>

#include "somd/corpus.hpp"
#include "somd/device_sim.hpp"
#include "somd/interp.hpp"
#include "somd/plan_gpu.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

ExecutionPlanGPU gplan(const Program& p, const std::string& m) { return plan_gpu(p, p.index_of(m)); }

DeviceOptions group(std::int64_t g, std::uint64_t seed = 0) {
  DeviceOptions o;
  o.max_group = g;
  o.seed = seed;
  return o;
}

struct LedgerCount {
  int puts = 0, gets = 0;
  std::map<std::string, int> put_by, get_by;
  std::map<int, int> launches_by_kernel;
};

LedgerCount count(const DeviceState& dev, const std::string& method = {}) {
  LedgerCount c;
  for (const auto& t : dev.transfers()) {
    if (t.to_device) {
      ++c.puts;
      ++c.put_by[t.name];
    } else {
      ++c.gets;
      ++c.get_by[t.name];
    }
  }
  for (const auto& l : dev.launches())
    if (method.empty() || l.method == method) ++c.launches_by_kernel[l.kernel];
  return c;
}

const char* kShapes = R"(
int[] band(dist int[] a) {
  for (int i = 2; i < a.length - 1; i++)
    a[i] = a[i] + 100;
  return a;
}

double[][] box(dist double[][] G) {
  for (int i = 1; i < G.length; i++)
    for (int j = 2; j < G[0].length - 1; j++)
      G[i][j] = G[i][j] + i * 10 + j;
  return G;
}

int twice(int x) {
  return x * 2 + 1;
}

int[] shift(dist int[] a) {
  for (int i = 0; i < a.length; i++)
    a[i] = a[(i + 1) % a.length] + 1;
  return a;
}
)";

}  // namespace

TEST(GridConfig, PaperExample) {
  EXPECT_EQ(grid_config(1000000, 512), (GridConfig{1954, 512, 1000448}));
}

TEST(GridConfig, ExactFit) { EXPECT_EQ(grid_config(512, 512), (GridConfig{1, 512, 512})); }

TEST(GridConfig, RoundsUp) { EXPECT_EQ(grid_config(1000, 256), (GridConfig{4, 256, 1024})); }

TEST(GridConfig, Empty) { EXPECT_EQ(grid_config(0, 64).total_threads, 0); }

TEST(GridConfig, Invariant) {
  std::mt19937_64 rng(3);
  for (int c = 0; c < 10000; ++c) {
    std::int64_t n = std::uniform_int_distribution<std::int64_t>(0, 5000000)(rng);
    std::int64_t g = std::uniform_int_distribution<std::int64_t>(1, 1024)(rng);
    GridConfig k = grid_config(n, g);
    ASSERT_EQ(k.group_size, g);
    ASSERT_EQ(k.total_threads, k.n_groups * k.group_size);
    ASSERT_GE(k.total_threads, n);
    ASSERT_LT(k.total_threads - n, g);
  }
}

TEST(PlanGpu, VectorAddSingleKernel) {
  Program p = compile(listing("vectoradd"));
  auto plan = gplan(p, "vectorAdd");
  ASSERT_EQ(plan.kernels.size(), 1u);
  EXPECT_EQ(plan.kernels[0].dims, 1);
  EXPECT_FALSE(plan.kernels[0].reduce.has_value());
  std::string text = print_kernels(plan);
  EXPECT_NE(text.find("if (i >= 0 && i < a.length)"), std::string::npos) << text;
  EXPECT_NE(text.find("put a before K0; put b before K0;"), std::string::npos) << text;
}

TEST(PlanGpu, StencilKernels) {
  Program p = compile(listing("stencil"));
  auto plan = gplan(p, "stencil");
  ASSERT_EQ(plan.kernels.size(), 2u);
  EXPECT_EQ(plan.kernels[0].dims, 2);
  EXPECT_FALSE(plan.kernels[0].reduce.has_value());
  ASSERT_TRUE(plan.kernels[1].reduce.has_value());
  EXPECT_TRUE(plan.kernels[1].reduce->merged);
  EXPECT_EQ(plan.kernels[1].reduce->acc_name, "Gtotal");
  EXPECT_NE(plan.schedule[0].find("num_iterations"), std::string::npos);
  EXPECT_TRUE(plan.warnings.empty());
  std::string want = read_file(std::string(SOMD_TEST_DIR) + "/golden/stencil_kernels.txt");
  EXPECT_EQ(print_kernels(plan), want);
}

TEST(PlanGpu, SumSelfOnHost) {
  Program p = compile(listing("sum"));
  auto plan = gplan(p, "sum");
  ASSERT_EQ(plan.kernels.size(), 1u);
  ASSERT_TRUE(plan.kernels[0].reduce.has_value());
  EXPECT_TRUE(plan.kernels[0].reduce->self);
}

TEST(PlanGpu, ScalarMethod) {
  Program p = compile(kShapes);
  auto plan = gplan(p, "twice");
  EXPECT_TRUE(plan.scalar_kernel);
  ASSERT_EQ(plan.kernels.size(), 1u);
  EXPECT_EQ(plan.kernels[0].dims, 0);
  DeviceState dev(group(4));
  EXPECT_EQ(run_gpu(plan, {Value::of_int(20)}, dev).i, 41);
  ASSERT_EQ(dev.launches().size(), 1u);
}

TEST(PlanGpu, UserStrategyIgnored) {
  const Program& p = corpus_program(*find_corpus("sparsematmult"));
  auto plan = gplan(p, "spmv");
  bool ignored = false;
  for (const auto& w : plan.warnings) ignored |= w.code == DiagCode::GpuStrategyIgnored;
  EXPECT_TRUE(ignored);
}

// Threads that pass the guards are exactly the loop's iterations.
TEST(PlanGpu, GuardSoundness) {
  Program p = compile(kShapes);
  auto band = gplan(p, "band");
  auto box = gplan(p, "box");
  for (std::int64_t g : {1, 2, 3, 4, 7, 256}) {
    for (std::int64_t n = 0; n <= 12; ++n) {
      std::vector<std::int64_t> a(static_cast<std::size_t>(n), 0);
      DeviceState dev(group(g));
      Value got = run_gpu(band, {ints(a)}, dev);
      Value want = interpret(p, "band", {ints(a)});
      ASSERT_TRUE(values_equal(got, want)) << "n=" << n << " g=" << g;
    }
    for (std::int64_t r = 1; r <= 6; ++r)
      for (std::int64_t c = 1; c <= 6; ++c) {
        std::vector<std::vector<double>> m(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(c), 0.0));
        DeviceState dev(group(g));
        Value got = run_gpu(box, {matrix(m)}, dev);
        Value want = interpret(p, "box", {matrix(m)});
        ASSERT_TRUE(values_equal(got, want)) << r << "x" << c << " g=" << g;
        ASSERT_TRUE(dev.hazards().empty());
      }
  }
}

TEST(DeviceSim, VectorAddMasksOverhang) {
  Program p = compile(listing("vectoradd"));
  DeviceState dev(group(4));
  Value v = run_gpu(gplan(p, "vectorAdd"), {ints({1, 2, 3}), ints({4, 5, 6})}, dev);
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{5, 7, 9}));
  ASSERT_EQ(dev.launches().size(), 1u);
  EXPECT_EQ(dev.launches()[0].grid, (GridConfig{1, 4, 4}));
  auto c = count(dev);
  EXPECT_EQ(c.put_by["a"], 1);
  EXPECT_EQ(c.put_by["b"], 1);
  EXPECT_EQ(c.get_by["c"], 1);
}

TEST(DeviceSim, EmptyVectorAdd) {
  Program p = compile(listing("vectoradd"));
  DeviceState dev;
  Value v = run_gpu(gplan(p, "vectorAdd"), {ints({}), ints({})}, dev);
  EXPECT_EQ(v.arr->length(), 0);
  ASSERT_EQ(dev.launches().size(), 1u);
  EXPECT_EQ(dev.launches()[0].grid.total_threads, 0);
  for (const auto& t : dev.transfers()) EXPECT_EQ(t.bytes, 0);
}

TEST(DeviceSim, SumGroupPartials) {
  Program p = compile(listing("sum"));
  std::vector<std::int64_t> a;
  for (int k = 1; k <= 16; ++k) a.push_back(k);
  DeviceState dev(group(4));
  EXPECT_EQ(run_gpu(gplan(p, "sum"), {ints(a)}, dev).i, 136);
  ASSERT_EQ(dev.launches().size(), 1u);
  EXPECT_EQ(dev.launches()[0].grid.n_groups, 4);
  auto c = count(dev);
  EXPECT_EQ(c.put_by["a"], 1);
  ASSERT_EQ(c.get_by["partials_K0"], 1);
  for (const auto& t : dev.transfers())
    if (t.name == "partials_K0") EXPECT_EQ(t.bytes, 4 * 4);
}

TEST(DeviceSim, NonPowerOfTwoGroups) {
  Program p = compile(listing("sum"));
  for (std::int64_t g : {1, 3, 5, 6, 7, 100}) {
    std::vector<std::int64_t> a;
    for (int k = 1; k <= 37; ++k) a.push_back(k * k);
    DeviceState dev(group(g));
    EXPECT_EQ(run_gpu(gplan(p, "sum"), {ints(a)}, dev).i, interpret(p, "sum", {ints(a)}).i) << g;
  }
}

TEST(DeviceSim, StencilLedger) {
  Program p = compile(listing("stencil"));
  auto G = matrix({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}, {13, 14, 15, 16}});
  DeviceState dev;
  run_gpu(gplan(p, "stencil"), {G, Value::of_int(3)}, dev);
  auto c = count(dev);
  EXPECT_EQ(c.puts, 1);
  EXPECT_EQ(c.put_by["G"], 1);
  EXPECT_EQ(c.launches_by_kernel[0], 3);
  EXPECT_EQ(c.launches_by_kernel[1], 1);
  EXPECT_EQ(c.gets, 1);
  EXPECT_EQ(c.get_by["partials_K1"], 1);
}

TEST(DeviceSim, SorMatchesOracle) {
  const CorpusProgram* c = find_corpus("sor");
  const Program& p = corpus_program(*c);
  auto plan = gplan(p, c->entry);
  auto G = matrix({{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}, {13, 14, 15, 16}});
  Value want = interpret(p, c->entry, {deep(G), Value::of_int(2)});
  for (std::int64_t g : {1, 2, 3, 4, 256}) {
    DeviceOptions o = group(g, 9);
    o.strict_hazards = true;
    DeviceState dev(o);
    Value got = run_gpu(plan, {deep(G), Value::of_int(2)}, dev);
    EXPECT_TRUE(values_close(got, want, 1e-12)) << g;
  }
}

TEST(DeviceSim, NormBroadcastScalarStaysOnDevice) {
  Program p = compile(listing("norm"));
  DeviceState dev;
  Value v = run_gpu(gplan(p, "norm"), {ints({9, 18, 18})}, dev);
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{0, 0, 0}));
  auto c = count(dev);
  EXPECT_EQ(c.put_by["a"], 1);
  EXPECT_EQ(c.get_by["a"], 1);
  EXPECT_EQ(c.launches_by_kernel.size(), 1u);
  EXPECT_EQ(dev.launches().size(), 2u);
}

TEST(DeviceSim, HazardFlagged) {
  Program p = compile(kShapes);
  auto plan = gplan(p, "shift");
  std::vector<std::int64_t> a{0, 1, 2, 3, 4, 5, 6, 7};
  DeviceState dev(group(4));
  run_gpu(plan, {ints(a)}, dev);
  ASSERT_FALSE(dev.hazards().empty());
  EXPECT_NE(dev.hazards()[0].writer_group, dev.hazards()[0].other_group);

  DeviceOptions strict = group(4);
  strict.strict_hazards = true;
  DeviceState dev2(strict);
  EXPECT_THROW(run_gpu(plan, {ints(a)}, dev2), HazardError);
}

TEST(DeviceSim, OneGroupNoHazard) {
  Program p = compile(kShapes);
  DeviceOptions strict = group(8);
  strict.strict_hazards = true;
  DeviceState dev(strict);
  EXPECT_NO_THROW(run_gpu(gplan(p, "shift"), {ints({0, 1, 2, 3, 4, 5, 6, 7})}, dev));
}

TEST(DeviceSim, FaultReportsThread) {
  Program p = compile(R"(
int[] oob(dist int[] a) {
  for (int i = 0; i < a.length; i++)
    a[i] = a[i + 1];
  return a;
}
)");
  DeviceState dev(group(2));
  try {
    run_gpu(gplan(p, "oob"), {ints({1, 2, 3})}, dev);
    FAIL() << "expected a device fault";
  } catch (const DeviceFault& f) {
    EXPECT_EQ(f.gid(), 2);
  }
}

TEST(DeviceSim, FreshStateReproducible) {
  const CorpusProgram* c = find_corpus("series");
  const Program& p = corpus_program(*c);
  auto plan = gplan(p, c->entry);
  auto args = c->make_args(GenConfig{c->test_size, -1, 5});
  std::uint64_t first = 0;
  for (int rep = 0; rep < 3; ++rep) {
    DeviceState dev(group(8, 77));
    std::uint64_t h = checksum(run_gpu(plan, deep(args), dev));
    if (rep == 0) first = h;
    EXPECT_EQ(h, first);
  }
}

TEST(DeviceSim, ForceF32) {
  Program p = compile(R"(
double[] third(dist double[] a) {
  for (int i = 0; i < a.length; i++)
    a[i] = a[i] / 3;
  return a;
}
)");
  DeviceOptions o;
  o.force_f32 = true;
  DeviceState dev(o);
  Value v = run_gpu(gplan(p, "third"), {dbls({1.0})}, dev);
  EXPECT_EQ(v.arr->dbls[0], static_cast<double>(1.0f / 3.0f));
}

TEST(DeviceSim, LedgerJson) {
  Program p = compile(listing("vectoradd"));
  DeviceState dev;
  run_gpu(gplan(p, "vectorAdd"), {ints({1}), ints({2})}, dev);
  std::string j = ledger_json(dev);
  EXPECT_NE(j.find("\"direction\": \"put\""), std::string::npos);
  EXPECT_NE(j.find("\"launches\""), std::string::npos);
}
