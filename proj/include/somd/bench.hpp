#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "somd/corpus.hpp"
#include "somd/engine.hpp"

namespace somd {

struct BenchConfig {
  std::string program;
  Backend backend = Backend::Sm;
  int slaves = 0;
  int workers = 0;
  GenConfig gen;
  int reps = 5;
  DeviceOptions gpu;
  bool speedup = false;  // also time the sm backend with one instance
  std::vector<BackendRule> rules;  // routes nested calls
};

struct LedgerSummary {
  int puts = 0;
  int gets = 0;
  int launches = 0;
  std::int64_t bytes_in = 0;
  std::int64_t bytes_out = 0;
  int hazards = 0;
};

struct BenchReport {
  std::string program;
  std::string backend;
  int slaves = 0;
  std::int64_t group_size = 0;  // gpu-sim only
  std::int64_t size = 0;
  std::vector<double> times_ms;
  double middle_tier_ms = 0;
  double seq_ms = 0;  // one oracle run
  std::optional<double> one_slave_ms;
  std::uint64_t checksum = 0;
  std::uint64_t oracle_checksum = 0;
  double max_rel_diff = 0;
  std::optional<LedgerSummary> ledger;  // one invocation
  std::vector<std::string> warnings;

  std::string to_json() const;
};

/// Mean of the middle third of the sorted samples (all samples below three).
double middle_tier_mean(std::vector<double> samples);

/// Runs the corpus program `reps` times. Throws std::runtime_error when the output disagrees
/// with the sequential oracle or fails the program's own check.
BenchReport bench(const BenchConfig& cfg);

}  // namespace somd
