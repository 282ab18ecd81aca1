#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "somd/ast.hpp"
#include "somd/value.hpp"

namespace somd {

/// Generator knobs. `size` is the problem size (-1: desk default); `extra` is the program's
/// second knob (series points, sor/spmv iterations; -1: default).
struct GenConfig {
  std::int64_t size = -1;
  std::int64_t extra = -1;
  std::uint64_t seed = 1;
};

using RunFn = std::function<Value(const std::string& method, std::vector<Value> args)>;

struct CorpusProgram {
  std::string name;
  std::string entry;  // method the benchmark calls
  std::string source;
  std::int64_t desk_size = 0;   // Class A / 10
  std::int64_t test_size = 0;   // small size for oracle sweeps
  bool gpu_eligible = true;     // every distributed loop becomes a kernel
  bool floating = false;        // output holds doubles
  std::function<std::vector<Value>(const GenConfig&)> make_args;
  /// Program-specific acceptance beyond oracle equality; returns an empty string when fine.
  std::function<std::string(const std::vector<Value>& args, const Value& out, const RunFn& run)> check;
};

const std::vector<CorpusProgram>& corpus();
const CorpusProgram* find_corpus(const std::string& name);
/// Validated program for a corpus entry, compiled once.
const Program& corpus_program(const CorpusProgram& c);

/// Raw embedded sources keyed by file stem.
const std::vector<std::pair<std::string, std::string>>& corpus_sources();

// crypt helpers: bytes travel as rows of eight ints, the last row zero-padded.
Value pack_bytes(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> unpack_bytes(const Value& rows, std::size_t length);
Value crypt_key(std::uint64_t seed);

// lufact helpers: matrices are column-major, a[j][i] = A(i, j).
Value column_major(const std::vector<std::vector<double>>& rows);
/// max_i |(A x - b)_i| / (max|A| * max|x| * n)
double lu_residual(const Value& a, const Value& x, const Value& b);
/// Relative error of P*A against L*U rebuilt from factor()'s output.
double lu_reconstruction_error(const Value& a, const Value& factored);

}  // namespace somd
