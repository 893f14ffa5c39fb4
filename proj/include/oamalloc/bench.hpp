#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oamalloc/oa_reclaim.hpp"
#include "oamalloc/vm_backend.hpp"

namespace oam::bench {

enum class Structure { List, Map };

const char* structure_name(Structure s);

struct WorkloadConfig {
  Structure structure = Structure::Map;
  std::size_t prefill = 10000;
  int search_pct = 50;
  int insert_pct = 25;
  int remove_pct = 25;
  unsigned threads = 1;
  double duration_s = 1.0;
  unsigned runs = 10;
  reclaim::Scheme scheme = reclaim::Scheme::Ver;
  BackendKind backend = BackendKind::KeepResident;
  std::uint64_t seed = 42;
  std::uint32_t limbo_capacity = 64;
  std::uint32_t scan_threshold = 32;
  std::uint32_t hazard_slots = 3;
  double warmup_s = 0.1;

  // Keys are drawn uniformly from [0, 2*prefill) so the 1:1 insert/remove
  // ratio keeps the structure size stationary.
  std::size_t key_range() const { return prefill > 0 ? 2 * prefill : 2; }

  // Error message, or nullopt when the config is usable.
  std::optional<std::string> validate() const;
};

struct RssSample {
  double at_seconds;  // relative to the start of the timed phase
  long bytes;
};

struct RunRow {
  unsigned threads = 0;
  unsigned run = 0;
  std::uint64_t ops = 0;
  double seconds = 0.0;
  double throughput = 0.0;
  std::uint64_t warnings = 0;
  std::uint64_t scans = 0;
  std::uint64_t freed = 0;
  long rss_peak = 0;
  std::vector<std::uint64_t> per_thread_ops;
  std::vector<RssSample> rss_samples;
};

struct RunReport {
  WorkloadConfig cfg;
  std::vector<RunRow> rows;

  double throughput_mean() const;
  double throughput_stddev() const;
  // Final key set of the last run (deterministic for 1-thread runs).
  std::vector<std::int64_t> final_keys;
};

// Prefills, runs cfg.threads workers for cfg.duration_s (after an untimed
// warm-up), repeats cfg.runs times. The global allocator must already use
// cfg.backend.
RunReport run_benchmark(const WorkloadConfig& cfg);

bool emit_csv(const RunReport& report, const std::string& path);
std::optional<std::vector<RunRow>> parse_csv(const std::string& path);

}  // namespace oam::bench
