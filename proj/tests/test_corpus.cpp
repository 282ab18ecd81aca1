#include <gtest/gtest.h>

#include <random>

#include "somd/corpus.hpp"
#include "somd/engine.hpp"
#include "somd/interp.hpp"
#include "test_util.hpp"

using namespace somd;
using namespace somd::test;

namespace {

Value run_on(const CorpusProgram& c, Backend b, int slaves, const std::vector<Value>& args, DeviceOptions gpu = {}) {
  EngineOptions o;
  o.force = b;
  o.slaves = slaves;
  o.gpu = gpu;
  Engine e(corpus_program(c), o);
  return e.run(c.entry, deep(args));
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(d(rng));
  return out;
}

}  // namespace

TEST(Corpus, AllNinePresent) {
  std::vector<std::string> names;
  for (const auto& c : corpus()) names.push_back(c.name);
  EXPECT_EQ(names, (std::vector<std::string>{"vectoradd", "sum", "norm", "normalize", "crypt", "lufact", "series", "sor",
                                             "sparsematmult"}));
}

TEST(Corpus, SmMatchesSeqSmallSweep) {
  for (const auto& c : corpus()) {
    for (int n : {1, 3, 8}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto args = c.make_args(GenConfig{c.test_size, -1, seed});
        Value want = interpret(corpus_program(c), c.entry, deep(args));
        Value got = run_on(c, Backend::Sm, n, args);
        if (c.floating)
          EXPECT_TRUE(values_close(got, want, 1e-12)) << c.name << " n=" << n << " seed=" << seed;
        else
          EXPECT_TRUE(values_equal(got, want)) << c.name << " n=" << n << " seed=" << seed;
      }
    }
  }
}

TEST(Corpus, GpuMatchesSmWithoutHazards) {
  for (const auto& c : corpus()) {
    if (!c.gpu_eligible) continue;
    auto args = c.make_args(GenConfig{c.test_size, -1, 4});
    Value sm = run_on(c, Backend::Sm, 4, args);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      DeviceOptions d;
      d.max_group = 4;
      d.seed = seed;
      d.strict_hazards = true;
      Value gpu = run_on(c, Backend::GpuSim, 1, args, d);
      if (c.floating)
        EXPECT_TRUE(values_close(gpu, sm, 1e-6)) << c.name;
      else
        EXPECT_TRUE(values_equal(gpu, sm)) << c.name;
    }
  }
}

TEST(Corpus, ChecksHold) {
  for (const auto& c : corpus()) {
    if (!c.check) continue;
    auto args = c.make_args(GenConfig{c.test_size, -1, 2});
    EngineOptions o;
    o.force = Backend::Sm;
    o.slaves = 3;
    Engine e(corpus_program(c), o);
    Value out = e.run(c.entry, deep(args));
    RunFn run = [&](const std::string& m, std::vector<Value> a) { return e.run(m, std::move(a)); };
    EXPECT_EQ(c.check(args, out, run), "") << c.name;
  }
}

TEST(Crypt, PackUnpack) {
  auto bytes = random_bytes(13, 1);
  Value rows = pack_bytes(bytes);
  EXPECT_EQ(rows.arr->length(), 2);
  EXPECT_EQ(rows.arr->rows[1]->ints[7], 0);
  EXPECT_EQ(unpack_bytes(rows, 13), bytes);
}

TEST(Crypt, RoundTrip) {
  const CorpusProgram* c = find_corpus("crypt");
  const Program& p = corpus_program(*c);
  for (std::size_t len : {0u, 1u, 7u, 8u, 9u, 100000u}) {
    auto bytes = random_bytes(len, len + 17);
    Value key = crypt_key(len);
    EngineOptions o;
    o.force = Backend::Sm;
    o.slaves = 4;
    Engine e(p, o);
    Value enc = e.run("cipher", {pack_bytes(bytes), key});
    Value dec = e.run("decipher", {enc, key});
    EXPECT_EQ(unpack_bytes(dec, len), bytes) << len;
    if (len >= 8) EXPECT_NE(unpack_bytes(enc, len), bytes);
  }
}

TEST(LuFact, Factorization) {
  const CorpusProgram* c = find_corpus("lufact");
  auto args = c->make_args(GenConfig{64, -1, 12});
  EngineOptions o;
  o.force = Backend::Sm;
  o.slaves = 4;
  Engine e(corpus_program(*c), o);
  Value factored = e.run("factor", {deep(args[0])});
  EXPECT_LT(lu_reconstruction_error(args[0], factored), 1e-12);
  Value x = e.run("lusolve", deep(args));
  EXPECT_LE(lu_residual(args[0], x, args[1]), 1e-8);
}

TEST(Series, FirstCoefficient) {
  const CorpusProgram* c = find_corpus("series");
  auto args = c->make_args(GenConfig{4, 400, 1});
  Value out = interpret(corpus_program(*c), c->entry, args);
  EXPECT_NEAR(out.arr->rows[0]->dbls[0], 2.8819181375448135, 1e-4);
}
