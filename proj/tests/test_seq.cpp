#include <gtest/gtest.h>

#include "somd/corpus.hpp"
#include "somd/interp.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

// Straight C++ transcription of the two-buffer relaxation.
double sor_oracle(std::vector<std::vector<double>> G, int iterations) {
  const double omega = 1.25;
  auto H = G;
  std::size_t n = G.size(), m = G[0].size();
  for (int p = 0; p < iterations; ++p) {
    auto& src = p % 2 == 0 ? G : H;
    auto& dst = p % 2 == 0 ? H : G;
    for (std::size_t i = 1; i + 1 < n; ++i)
      for (std::size_t j = 1; j + 1 < m; ++j)
        dst[i][j] = omega * 0.25 * (src[i - 1][j] + src[i + 1][j] + src[i][j - 1] + src[i][j + 1]) + (1 - omega) * src[i][j];
  }
  const auto& last = iterations % 2 == 0 ? G : H;
  double total = 0;
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t j = 1; j + 1 < m; ++j) total += last[i][j];
  return total;
}

}  // namespace

TEST(Seq, VectorAdd) {
  Program p = compile(listing("vectoradd"));
  EXPECT_EQ(int_cells(interpret(p, "vectorAdd", {ints({1}), ints({2})})), (std::vector<std::int64_t>{3}));
}

TEST(Seq, SumToTen) {
  Program p = compile(listing("sum"));
  EXPECT_EQ(interpret(p, "sum", {ints({1, 2, 3, 4, 5, 6, 7, 8, 9, 10})}).i, 55);
}

TEST(Seq, SorFourByFour) {
  const Program& p = corpus_program(*find_corpus("sor"));
  std::vector<std::vector<double>> G{{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}, {13, 14, 15, 16}};
  Value v = interpret(p, "sor", {matrix(G), Value::of_int(2)});
  EXPECT_EQ(v.d, sor_oracle(G, 2));
  // A linear ramp is a fixed point: at (1,1) one sweep gives 0.3125 * 24 - 0.25 * 6 = 6.
  EXPECT_EQ(interpret(p, "sor", {matrix(G), Value::of_int(1)}).d, 6 + 7 + 10 + 11);
}

TEST(Seq, SorRandomMatrices) {
  const CorpusProgram* c = find_corpus("sor");
  const Program& p = corpus_program(*c);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto args = c->make_args(GenConfig{7, 3, seed});
    std::vector<std::vector<double>> G;
    for (const auto& row : args[0].arr->rows) G.push_back(row->dbls);
    EXPECT_EQ(interpret(p, "sor", deep(args)).d, sor_oracle(G, 3));
  }
}

TEST(Seq, JavaIntegerSemantics) {
  Program p = compile(R"(
int wrap(int x) { return x * 65536 * 65536 + 7 / 2 - (-7) / 2 + (-7) % 3; }
long widen(int x) { long y = x; return y * 65536 * 65536; }
int trunc(double d) { return (int) d; }
)");
  EXPECT_EQ(interpret(p, "wrap", {Value::of_int(3)}).i, 0 + 3 + 3 - 1);
  EXPECT_EQ(interpret(p, "widen", {Value::of_int(3)}).i, 3LL << 32);
  EXPECT_EQ(interpret(p, "trunc", {Value::of_double(-2.7)}).i, -2);
}

TEST(Seq, BoundsErrorHasLocation) {
  Program p = compile("int f(int[] a) {\n  return a[5];\n}\n");
  try {
    interpret(p, "f", {ints({1})});
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_EQ(e.loc().line, 2);
  }
}

TEST(Seq, QualifiersIgnored) {
  Program p = compile(listing("normalize"));
  Value v = interpret(p, "normalize", {ints({3, 4})});
  EXPECT_EQ(int_cells(v), (std::vector<std::int64_t>{0, 0}));
}
