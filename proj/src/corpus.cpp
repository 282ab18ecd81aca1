#include "somd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "somd/validate.hpp"

namespace somd {

namespace {

using Rng = std::mt19937_64;

std::int64_t pick(std::int64_t v, std::int64_t dflt) { return v >= 0 ? v : dflt; }

Value int_vec(Rng& rng, std::int64_t n, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = d(rng);
  return Value::of_array(Array::from_ints(BaseType::Int, std::move(v)));
}

Value dbl_vec(Rng& rng, std::int64_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = d(rng);
  return Value::of_array(Array::from_doubles(std::move(v)));
}

double cell(const Value& m, std::int64_t r, std::int64_t c) {
  return m.arr->rows[static_cast<std::size_t>(r)]->dbls[static_cast<std::size_t>(c)];
}

std::vector<CorpusProgram> build() {
  std::vector<CorpusProgram> out;
  auto src = [](const std::string& stem) {
    for (const auto& [k, v] : corpus_sources())
      if (k == stem) return v;
    throw std::logic_error("corpus source missing: " + stem);
  };

  {
    CorpusProgram c{"vectoradd", "vectorAdd", src("vectoradd"), 300000, 37, true, false, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      std::int64_t n = pick(g.size, 300000);
      Value a = int_vec(rng, n, -1000000, 1000000);
      Value b = int_vec(rng, n, -1000000, 1000000);
      return std::vector<Value>{a, b};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"sum", "sum", src("sum"), 300000, 41, true, false, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      return std::vector<Value>{int_vec(rng, pick(g.size, 300000), -1000, 1000)};
    };
    out.push_back(std::move(c));
  }
  for (const char* name : {"norm", "normalize"}) {
    CorpusProgram c{name, name, src(name), 300000, 29, true, true, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      return std::vector<Value>{dbl_vec(rng, std::max<std::int64_t>(1, pick(g.size, 300000)), 0.1, 1.0)};
    };
    c.check = [](const std::vector<Value>&, const Value& out, const RunFn&) -> std::string {
      double s = 0;
      for (double d : out.arr->dbls) s += d * d;
      if (std::abs(s - 1.0) > 1e-9) return "result is not a unit vector (|x|^2 = " + std::to_string(s) + ")";
      return {};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"crypt", "cipher", src("crypt"), 300000, 61, true, false, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      std::int64_t n = pick(g.size, 300000);
      std::uniform_int_distribution<int> d(0, 255);
      std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
      for (auto& b : bytes) b = static_cast<std::uint8_t>(d(rng));
      return std::vector<Value>{pack_bytes(bytes), crypt_key(g.seed)};
    };
    c.check = [](const std::vector<Value>& args, const Value& out, const RunFn& run) -> std::string {
      Value back = run("decipher", {out, args[1]});
      if (!values_equal(back, args[0])) return "decipher(cipher(x)) != x";
      return {};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"lufact", "lusolve", src("lufact"), 50, 9, true, true, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      std::int64_t n = pick(g.size, 50);
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
      for (auto& row : a)
        for (auto& x : row) x = d(rng);
      for (std::int64_t i = 0; i < n; ++i) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] += 2.0;
      return std::vector<Value>{column_major(a), dbl_vec(rng, n, -1.0, 1.0)};
    };
    c.check = [](const std::vector<Value>& args, const Value& out, const RunFn&) -> std::string {
      double r = lu_residual(args[0], out, args[1]);
      if (!(r <= 1e-8)) return "solve residual " + std::to_string(r) + " above 1e-8";
      return {};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"series", "series", src("series"), 1000, 6, true, true, {}, {}};
    c.make_args = [](const GenConfig& g) {
      std::int64_t n = pick(g.size, 1000);
      std::int64_t points = pick(g.extra, n <= 50 ? 40 : 1000);
      return std::vector<Value>{Value::of_int(static_cast<std::int32_t>(n)),
                                Value::of_int(static_cast<std::int32_t>(points))};
    };
    c.check = [](const std::vector<Value>& args, const Value& out, const RunFn&) -> std::string {
      // a_0 is the mean of (x+1)^x over [0,2]: the trapezoid sum must land near the exact value.
      if (args[0].i < 1) return {};
      double a0 = cell(out, 0, 0);
      if (std::abs(a0 - 2.8819181375448135) > 0.05) return "a_0 = " + std::to_string(a0) + " is implausible";
      return {};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"sor", "sor", src("sor"), 100, 7, true, true, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      std::int64_t n = pick(g.size, 100);
      std::uniform_real_distribution<double> d(0.0, 1.0);
      auto m = Array::make2(BaseType::Double, n, n);
      for (auto& row : m->rows)
        for (auto& x : row->dbls) x = d(rng);
      std::int64_t it = pick(g.extra, n <= 20 ? 5 : 100);
      return std::vector<Value>{Value::of_array(m), Value::of_int(static_cast<std::int32_t>(it))};
    };
    out.push_back(std::move(c));
  }
  {
    CorpusProgram c{"sparsematmult", "spmv", src("sparsematmult"), 5000, 23, false, true, {}, {}};
    c.make_args = [](const GenConfig& g) {
      Rng rng(g.seed);
      std::int64_t n = std::max<std::int64_t>(1, pick(g.size, 5000));
      std::int64_t nz = 5 * n;
      std::uniform_int_distribution<std::int64_t> idx(0, n - 1);
      std::vector<std::pair<std::int64_t, std::int64_t>> cells(static_cast<std::size_t>(nz));
      for (auto& p : cells) p = {idx(rng), idx(rng)};
      std::sort(cells.begin(), cells.end());
      std::vector<std::int64_t> row, col;
      for (const auto& [r, cc] : cells) {
        row.push_back(r);
        col.push_back(cc);
      }
      Value val = dbl_vec(rng, nz, -1.0, 1.0);
      Value x = dbl_vec(rng, n, -1.0, 1.0);
      std::int64_t it = pick(g.extra, n <= 50 ? 2 : 20);
      return std::vector<Value>{val, Value::of_array(Array::from_ints(BaseType::Int, col)),
                                Value::of_array(Array::from_ints(BaseType::Int, row)), x,
                                Value::of_int(static_cast<std::int32_t>(n)), Value::of_int(static_cast<std::int32_t>(it))};
    };
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

const std::vector<CorpusProgram>& corpus() {
  static const std::vector<CorpusProgram> all = build();
  return all;
}

const CorpusProgram* find_corpus(const std::string& name) {
  for (const auto& c : corpus())
    if (c.name == name) return &c;
  return nullptr;
}

const Program& corpus_program(const CorpusProgram& c) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<Program>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[c.name];
  if (!slot) slot = std::make_unique<Program>(compile(c.source));
  return *slot;
}

Value pack_bytes(const std::vector<std::uint8_t>& bytes) {
  std::int64_t rows = static_cast<std::int64_t>((bytes.size() + 7) / 8);
  auto a = Array::make2(BaseType::Int, rows, 8);
  for (std::size_t k = 0; k < bytes.size(); ++k) a->rows[k / 8]->ints[k % 8] = bytes[k];
  return Value::of_array(a);
}

std::vector<std::uint8_t> unpack_bytes(const Value& rows, std::size_t length) {
  std::vector<std::uint8_t> out(length);
  for (std::size_t k = 0; k < length; ++k)
    out[k] = static_cast<std::uint8_t>(rows.arr->rows[k / 8]->ints[k % 8]);
  return out;
}

Value crypt_key(std::uint64_t seed) {
  Rng rng(seed * 7919 + 17);
  return int_vec(rng, 16, 0, 255);
}

Value column_major(const std::vector<std::vector<double>>& rows) {
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
  const std::int64_t m = n ? static_cast<std::int64_t>(rows[0].size()) : 0;
  auto a = Array::make2(BaseType::Double, m, n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < m; ++j)
      a->rows[static_cast<std::size_t>(j)]->dbls[static_cast<std::size_t>(i)] =
          rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return Value::of_array(a);
}

double lu_residual(const Value& a, const Value& x, const Value& b) {
  const std::int64_t n = a.arr->length();
  double amax = 0, xmax = 0, rmax = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double r = -b.arr->dbls[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < n; ++j) {
      double aij = cell(a, j, i);
      amax = std::max(amax, std::abs(aij));
      r += aij * x.arr->dbls[static_cast<std::size_t>(j)];
    }
    rmax = std::max(rmax, std::abs(r));
    xmax = std::max(xmax, std::abs(x.arr->dbls[static_cast<std::size_t>(i)]));
  }
  if (n == 0) return 0;
  double scale = amax * xmax * static_cast<double>(n);
  return scale > 0 ? rmax / scale : rmax;
}

double lu_reconstruction_error(const Value& a, const Value& f) {
  // factor() leaves U on and above the diagonal, negated multipliers below it, and the pivot
  // of step k in f[n][k]. Undo the elimination steps in reverse order starting from U.
  const std::int64_t n = a.arr->length();
  std::vector<std::vector<double>> x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t i = 0; i <= j; ++i) x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cell(f, j, i);
  for (std::int64_t k = n - 2; k >= 0; --k) {
    for (std::int64_t i = k + 1; i < n; ++i) {
      double mult = cell(f, k, i);
      for (std::int64_t j = 0; j < n; ++j)
        x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -= mult * x[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }
    auto l = static_cast<std::int64_t>(cell(f, n, k));
    std::swap(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(l)]);
  }
  double amax = 0, emax = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      amax = std::max(amax, std::abs(cell(a, j, i)));
      emax = std::max(emax, std::abs(cell(a, j, i) - x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
  return amax > 0 ? emax / amax : emax;
}

}  // namespace somd
