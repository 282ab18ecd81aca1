#include <gtest/gtest.h>

#include "somd/analysis.hpp"
#include "somd/corpus.hpp"
#include "somd/parser.hpp"
#include "somd/printer.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

std::vector<DiagCode> codes_of(const std::string& src) {
  try {
    compile(src);
  } catch (const CompileError& e) {
    std::vector<DiagCode> out;
    for (const auto& d : e.diagnostics()) out.push_back(d.code);
    return out;
  }
  return {};
}

int count_kind(const Stmt& s, StmtKind k) {
  int n = 0;
  for_each_stmt(s, [&](const Stmt& x) { n += x.kind == k; });
  return n;
}

}  // namespace

TEST(Frontend, ListingsCompile) {
  for (const char* name : {"vectoradd", "sum", "norm", "normalize", "stencil"}) {
    SCOPED_TRACE(name);
    std::vector<Diagnostic> warnings;
    EXPECT_NO_THROW(compile(listing(name), &warnings));
  }
}

TEST(Frontend, VectorAddShape) {
  Program p = compile(listing("vectoradd"));
  const MethodDecl* m = p.find("vectorAdd");
  ASSERT_NE(m, nullptr);
  ASSERT_EQ(m->params.size(), 2u);
  EXPECT_TRUE(m->params[0].dist.has_value());
  EXPECT_TRUE(m->params[1].dist.has_value());
  EXPECT_FALSE(m->reduce.has_value());
  ASSERT_TRUE(m->effective_reduce().has_value());
  EXPECT_EQ(m->effective_reduce()->kind, ReduceKind::ArrayAssembly);
  EXPECT_TRUE(m->is_somd);

  const Stmt* loop = nullptr;
  for_each_stmt(*m->body, [&](const Stmt& s) {
    if (s.kind == StmtKind::For && !loop) loop = &s;
  });
  ASSERT_NE(loop, nullptr);
  EXPECT_EQ(loop->loop_rank, 0);
  EXPECT_EQ(loop->induction, "i");
}

TEST(Frontend, MinimalMethod) {
  Program p = compile("int f(){return 0;}");
  ASSERT_EQ(p.methods.size(), 1u);
  const MethodDecl& m = p.methods[0];
  EXPECT_TRUE(m.params.empty());
  EXPECT_FALSE(m.reduce.has_value());
  EXPECT_FALSE(m.is_somd);
}

TEST(Frontend, StencilShape) {
  Program p = compile(listing("stencil"));
  const MethodDecl* m = p.find("stencil");
  ASSERT_NE(m, nullptr);
  ASSERT_TRUE(m->params[0].dist.has_value());
  const DistSpec& d = *m->params[0].dist;
  ASSERT_EQ(d.view.size(), 2u);
  EXPECT_EQ(d.view[0], (ViewPair{1, 1}));
  EXPECT_EQ(d.view[1], (ViewPair{1, 1}));
  ASSERT_TRUE(m->reduce.has_value());
  EXPECT_EQ(m->reduce->kind, ReduceKind::PrimOp);
  EXPECT_EQ(m->reduce->op, Op::Add);
  EXPECT_EQ(count_kind(*m->body, StmtKind::Sync), 1);
}

TEST(Frontend, SumUsesSelf) {
  Program p = compile(listing("sum"));
  ASSERT_TRUE(p.methods[0].reduce.has_value());
  EXPECT_EQ(p.methods[0].reduce->kind, ReduceKind::Self);
}

TEST(Frontend, NormalizeHasSharedSyncReduce) {
  Program p = compile(listing("normalize"));
  const Stmt* sync = nullptr;
  for_each_stmt(*p.methods[0].body, [&](const Stmt& s) {
    if (s.kind == StmtKind::Sync) sync = &s;
  });
  ASSERT_NE(sync, nullptr);
  EXPECT_EQ(sync->target, "norm");
  ASSERT_TRUE(sync->reduce.has_value());
  EXPECT_EQ(sync->reduce->op, Op::Add);
}

TEST(Frontend, InputOnlyViolation) {
  auto codes = codes_of("int[] f(int[] a) { a[0] = 1; return a; }");
  ASSERT_FALSE(codes.empty());
  EXPECT_EQ(codes[0], DiagCode::InputOnlyViolation);
}

TEST(Frontend, DistParamMayBeWritten) {
  EXPECT_TRUE(codes_of("int[] f(dist int[] a) { for (int i = 0; i < a.length; i++) a[i] = 1; return a; }").empty());
}

TEST(Frontend, ConditionalNestedReduction) {
  const char* src = R"(
int[] norm(dist int[] a) {
  double norm = 1;
  if (a.length > 0) norm = Math.sqrt(sumProd(a));
  for (int i = 0; i < a.length; i++) a[i] = a[i] / norm;
  return a;
}
reduce(+)
double sumProd(int[] a) {
  double s = 0;
  for (int i = 0; i < a.length; i++) s += a[i] * a[i];
  return s;
}
)";
  auto codes = codes_of(src);
  ASSERT_FALSE(codes.empty());
  EXPECT_EQ(codes[0], DiagCode::ConditionalNestedReduction);
}

TEST(Frontend, SyntaxErrorHasLocation) {
  try {
    parse("int f( { return 0; }");
    FAIL() << "expected a syntax error";
  } catch (const CompileError& e) {
    ASSERT_FALSE(e.diagnostics().empty());
    EXPECT_EQ(e.diagnostics()[0].code, DiagCode::SyntaxError);
    EXPECT_EQ(e.diagnostics()[0].loc.line, 1);
  }
}

TEST(Frontend, UnknownStrategy) {
  auto codes = codes_of("int[] f(dist(NoSuchPartitioner) int[] a) { return a; }");
  ASSERT_FALSE(codes.empty());
  EXPECT_EQ(codes[0], DiagCode::UnknownStrategy);
}

TEST(Frontend, DiagnosticsJson) {
  std::vector<Diagnostic> d{{DiagCode::ConfigError, Severity::Error, SourceLoc{3, 1}, "x"}};
  std::string j = diagnostics_to_json(d);
  EXPECT_NE(j.find("CONFIG_ERROR"), std::string::npos);
  EXPECT_NE(j.find("\"line\": 3"), std::string::npos);
}

// Printing and re-parsing preserves structure, for every listing and corpus program.
TEST(Frontend, PrintParseRoundTrip) {
  std::vector<std::pair<std::string, std::string>> sources;
  for (const char* name : {"vectoradd", "sum", "norm", "normalize", "stencil"}) sources.emplace_back(name, listing(name));
  for (const auto& s : corpus_sources()) sources.push_back(s);
  for (const auto& [name, src] : sources) {
    SCOPED_TRACE(name);
    Program a = parse(src);
    std::string printed = print_program(a);
    Program b = parse(printed);
    EXPECT_EQ(dump_structure(a), dump_structure(b));
    EXPECT_EQ(print_program(b), printed);
  }
}

// Loop ranks are numbered consecutively from 0 within each method.
TEST(Frontend, LoopRanksConsecutive) {
  for (const auto& [name, src] : corpus_sources()) {
    SCOPED_TRACE(name);
    Program p = compile(src);
    for (const auto& m : p.methods) {
      std::vector<int> ranks;
      for_each_stmt(*m.body, [&](const Stmt& s) {
        if (s.kind == StmtKind::For) ranks.push_back(s.loop_rank);
      });
      std::sort(ranks.begin(), ranks.end());
      for (std::size_t i = 0; i < ranks.size(); ++i) EXPECT_EQ(ranks[i], static_cast<int>(i));
    }
  }
}
