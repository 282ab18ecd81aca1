#include <gtest/gtest.h>

#include "somd/bench.hpp"
#include "somd/engine.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

const std::set<Backend> kAll{Backend::Seq, Backend::Sm, Backend::GpuSim};

int config_error_line(const std::string& text) {
  try {
    parse_backend_rules(text);
  } catch (const CompileError& e) {
    EXPECT_EQ(e.diagnostics().at(0).code, DiagCode::ConfigError);
    return e.diagnostics().at(0).loc.line;
  }
  return -1;
}

const char* kDriver = R"(
reduce(+)
double total(dist double[] a) {
  double s = 0;
  for (int i = 0; i < a.length; i++) s += a[i];
  return s;
}

double driver(double[] a) {
  return total(a) + 1;
}
)";

}  // namespace

TEST(Rules, Parse) {
  auto rules = parse_backend_rules("# comment\n\nBench.series:gpu-sim\n  Bench.sor : sm  # trailing\nx.y.crypt:seq\n");
  ASSERT_EQ(rules.size(), 3u);
  EXPECT_EQ(rules[0].qualifier, "Bench");
  EXPECT_EQ(rules[0].method, "series");
  EXPECT_EQ(rules[0].target, Backend::GpuSim);
  EXPECT_EQ(rules[0].line, 3);
  EXPECT_EQ(rules[1].target, Backend::Sm);
  EXPECT_EQ(rules[2].qualifier, "x.y");
  EXPECT_EQ(rules[2].target, Backend::Seq);
}

TEST(Rules, ErrorsCarryLine) {
  EXPECT_EQ(config_error_line("A.f:sm\n# ok\nnot a rule\n"), 3);
  EXPECT_EQ(config_error_line("A.f:quantum\n"), 1);
  EXPECT_EQ(config_error_line("f:sm\n"), 1);
  EXPECT_EQ(config_error_line("A.f:sm\nB.f:seq\n"), 2);
  EXPECT_EQ(config_error_line("A.1f:sm\n"), 1);
}

TEST(Rules, DefaultIsSm) {
  auto c = select_backend({}, "anything", kAll);
  EXPECT_EQ(c.backend, Backend::Sm);
  EXPECT_TRUE(c.warning.empty());
}

TEST(Rules, RuleHonoured) {
  auto c = select_backend(parse_backend_rules("Bench.series:gpu-sim"), "series", kAll);
  EXPECT_EQ(c.backend, Backend::GpuSim);
  EXPECT_TRUE(c.warning.empty());
}

TEST(Rules, UnavailableFallsBack) {
  auto c = select_backend(parse_backend_rules("Bench.series:gpu-sim"), "series", {Backend::Seq, Backend::Sm});
  EXPECT_EQ(c.backend, Backend::Sm);
  EXPECT_FALSE(c.warning.empty());
  auto d = select_backend(parse_backend_rules("Bench.series:cluster"), "series", kAll);
  EXPECT_EQ(d.backend, Backend::Sm);
  EXPECT_FALSE(d.warning.empty());
}

TEST(EngineRun, ForcedBackendsAgree) {
  Program p = compile(listing("vectoradd"));
  for (Backend b : {Backend::Seq, Backend::Sm, Backend::GpuSim}) {
    EngineOptions o;
    o.force = b;
    o.slaves = 3;
    Engine e(p, o);
    Value v = e.run("vectorAdd", {ints({1, 2, 3, 4}), ints({10, 20, 30, 40})});
    EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{11, 22, 33, 44})) << backend_name(b);
  }
}

TEST(EngineRun, NestedCallFollowsItsRule) {
  Program p = compile(kDriver);
  EngineOptions o;
  o.rules = parse_backend_rules("P.total:gpu-sim\nP.driver:seq\n");
  Engine e(p, o);
  Value v = e.run("driver", {dbls({1, 2, 3})});
  EXPECT_EQ(v.d, 7);
  EXPECT_EQ(e.device().launches().size(), 1u);
}

TEST(EngineRun, DisabledGpuWarns) {
  Program p = compile(kDriver);
  EngineOptions o;
  o.rules = parse_backend_rules("P.total:gpu-sim\n");
  o.gpu_enabled = false;
  o.slaves = 2;
  Engine e(p, o);
  EXPECT_EQ(e.run("total", {dbls({1, 2, 3})}).d, 6);
  EXPECT_TRUE(e.device().launches().empty());
  ASSERT_EQ(e.warnings().size(), 1u);
  EXPECT_NE(e.warnings()[0].find("not available"), std::string::npos);
}

TEST(EngineRun, ClusterRuleRunsOnSm) {
  Program p = compile(kDriver);
  EngineOptions o;
  o.rules = parse_backend_rules("P.total:cluster\n");
  o.slaves = 2;
  Engine e(p, o);
  EXPECT_EQ(e.run("total", {dbls({1, 2, 3})}).d, 6);
  EXPECT_FALSE(e.warnings().empty());
}

TEST(Bench, MiddleTier) {
  EXPECT_EQ(middle_tier_mean({5, 1, 9, 3, 7, 100}), 6.0);  // mean of 5 and 7
  EXPECT_EQ(middle_tier_mean({2}), 2.0);
  EXPECT_EQ(middle_tier_mean({1, 3}), 2.0);
  EXPECT_EQ(middle_tier_mean({}), 0.0);
}

TEST(Bench, SorLedgerSummary) {
  BenchConfig cfg;
  cfg.program = "sor";
  cfg.backend = Backend::GpuSim;
  cfg.gen.size = 12;
  cfg.gen.extra = 10;
  cfg.reps = 2;
  BenchReport r = bench(cfg);
  ASSERT_TRUE(r.ledger.has_value());
  EXPECT_EQ(r.ledger->puts, 1);
  EXPECT_EQ(r.ledger->gets, 1);
  EXPECT_EQ(r.ledger->launches, 12);  // copy, ten sweeps, reduction
  EXPECT_EQ(r.ledger->hazards, 0);
  EXPECT_EQ(r.times_ms.size(), 2u);
  EXPECT_NE(r.to_json().find("\"ledger\""), std::string::npos);
}

TEST(Bench, CryptOnSmChecksRoundTrip) {
  BenchConfig cfg;
  cfg.program = "crypt";
  cfg.slaves = 3;
  cfg.gen.size = 1001;
  cfg.reps = 1;
  cfg.speedup = true;
  BenchReport r = bench(cfg);
  EXPECT_EQ(r.checksum, r.oracle_checksum);
  EXPECT_TRUE(r.one_slave_ms.has_value());
}

TEST(Bench, UnknownProgram) {
  BenchConfig cfg;
  cfg.program = "nope";
  EXPECT_THROW(bench(cfg), std::invalid_argument);
}
