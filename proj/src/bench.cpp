#include "oamalloc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <thread>

#include "oamalloc/lockfree/hash_map.hpp"
#include "oamalloc/lockfree/list.hpp"

namespace oam::bench {

namespace {

using Clock = std::chrono::steady_clock;

// One interface over both structures so the worker loop is shared.
struct Target {
  lockfree::List* list = nullptr;
  lockfree::HashMap* map = nullptr;

  bool search(std::int64_t k) { return list ? list->search(k) : map->search(k); }
  bool insert(std::int64_t k, std::int64_t v) {
    return list ? list->insert(k, v) : map->insert(k, v);
  }
  bool remove(std::int64_t k) { return list ? list->remove(k) : map->remove(k); }
};

std::uint64_t mix_seed(std::uint64_t seed, unsigned run, unsigned tid) {
  std::uint64_t x = seed;
  x ^= 0x9e3779b97f4a7c15ull * (run + 1);
  x ^= 0xbf58476d1ce4e5b9ull * (tid + 1);
  return x;
}

}  // namespace

const char* structure_name(Structure s) {
  return s == Structure::List ? "list" : "map";
}

std::optional<std::string> WorkloadConfig::validate() const {
  if (search_pct < 0 || insert_pct < 0 || remove_pct < 0 ||
      search_pct + insert_pct + remove_pct != 100)
    return "operation percentages must be non-negative and sum to 100";
  if (insert_pct != remove_pct)
    return "insert and remove percentages must be equal (1:1 ratio)";
  if (threads == 0) return "at least one thread is required";
  if (runs == 0) return "at least one run is required";
  if (duration_s <= 0) return "duration must be positive";
  if (scan_threshold >= limbo_capacity)
    return "scan threshold must be below the limbo capacity";
  if (hazard_slots < 3 || hazard_slots > reclaim::kMaxHazardSlots)
    return "hazard slot count out of range";
  return std::nullopt;
}

double RunReport::throughput_mean() const {
  if (rows.empty()) return 0.0;
  double s = 0;
  for (const auto& r : rows) s += r.throughput;
  return s / static_cast<double>(rows.size());
}

double RunReport::throughput_stddev() const {
  if (rows.size() < 2) return 0.0;
  double m = throughput_mean();
  double s = 0;
  for (const auto& r : rows) s += (r.throughput - m) * (r.throughput - m);
  return std::sqrt(s / static_cast<double>(rows.size() - 1));
}

RunReport run_benchmark(const WorkloadConfig& cfg) {
  if (auto err = cfg.validate()) {
    std::fprintf(stderr, "bench: %s\n", err->c_str());
    return {cfg, {}};
  }
  RunReport report;
  report.cfg = cfg;

  for (unsigned run = 0; run < cfg.runs; ++run) {
    reclaim::Config rc;
    rc.scheme = cfg.scheme;
    rc.limbo_capacity = cfg.limbo_capacity;
    rc.scan_threshold = cfg.scan_threshold;
    rc.hazard_slots = cfg.hazard_slots;
    auto domain = std::make_unique<reclaim::Domain>(rc);

    std::unique_ptr<lockfree::List> list;
    std::unique_ptr<lockfree::HashMap> map;
    Target target;
    if (cfg.structure == Structure::List) {
      list = std::make_unique<lockfree::List>(*domain);
      target.list = list.get();
    } else {
      map = std::make_unique<lockfree::HashMap>(*domain, cfg.prefill);
      target.map = map.get();
    }

    // Prefill with uniformly random keys until the target size is reached.
    std::mt19937_64 prng(mix_seed(cfg.seed, run, 0xffffffffu));
    std::uniform_int_distribution<std::int64_t> keys(
        0, static_cast<std::int64_t>(cfg.key_range()) - 1);
    std::size_t inserted = 0;
    while (inserted < cfg.prefill) {
      std::int64_t k = keys(prng);
      if (target.insert(k, k)) ++inserted;
    }

    std::atomic<bool> warmup_done{false};
    std::atomic<bool> stop{false};
    std::vector<std::uint64_t> ops_per_thread(cfg.threads, 0);
    std::vector<std::thread> workers;
    std::atomic<unsigned> ready{0};

    for (unsigned t = 0; t < cfg.threads; ++t) {
      workers.emplace_back([&, t] {
        std::mt19937_64 rng(mix_seed(cfg.seed, run, t));
        std::uniform_int_distribution<int> op(0, 99);
        auto one_op = [&] {
          int o = op(rng);
          std::int64_t k = keys(rng);
          if (o < cfg.search_pct) {
            target.search(k);
          } else if (o < cfg.search_pct + cfg.insert_pct) {
            target.insert(k, k);
          } else {
            target.remove(k);
          }
        };
        // Untimed warm-up fills the thread caches.
        while (!warmup_done.load(std::memory_order_acquire)) one_op();
        ready.fetch_add(1, std::memory_order_acq_rel);
        std::uint64_t done = 0;
        while (!stop.load(std::memory_order_acquire)) {
          one_op();
          ++done;  // completed operations only; restarts count once
        }
        ops_per_thread[t] = done;
      });
    }

    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.warmup_s));
    warmup_done.store(true, std::memory_order_release);
    while (ready.load(std::memory_order_acquire) < cfg.threads)
      std::this_thread::yield();

    RunRow row;
    long rss0 = VmBackend::resident_bytes();
    auto t0 = Clock::now();
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.duration_s));
    stop.store(true, std::memory_order_release);
    for (auto& w : workers) w.join();
    auto t1 = Clock::now();
    long rss1 = VmBackend::resident_bytes();

    row.threads = cfg.threads;
    row.run = run;
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    row.per_thread_ops = ops_per_thread;
    for (auto n : ops_per_thread) row.ops += n;
    row.throughput = static_cast<double>(row.ops) / row.seconds;
    row.warnings = domain->warning_events();
    row.scans = domain->scan_count();
    row.freed = domain->freed_count();
    row.rss_samples = {{0.0, rss0}, {row.seconds, rss1}};
    row.rss_peak = std::max(rss0, rss1);
    report.rows.push_back(std::move(row));

    if (run + 1 == cfg.runs) {
      report.final_keys.clear();
      auto grab = [&](std::int64_t k, std::int64_t) {
        report.final_keys.push_back(k);
      };
      if (list) list->for_each(grab);
      if (map) map->for_each(grab);
      std::sort(report.final_keys.begin(), report.final_keys.end());
    }
  }
  return report;
}

bool emit_csv(const RunReport& report, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) return false;
  std::fprintf(f,
               "structure,scheme,backend,threads,run,ops,seconds,throughput,"
               "warnings,scans,freed,rss_peak\n");
  for (const auto& r : report.rows) {
    std::fprintf(f, "%s,%s,%s,%u,%u,%llu,%.6f,%.3f,%llu,%llu,%llu,%ld\n",
                 structure_name(report.cfg.structure),
                 reclaim::scheme_name(report.cfg.scheme),
                 backend_name(report.cfg.backend), r.threads, r.run,
                 static_cast<unsigned long long>(r.ops), r.seconds,
                 r.throughput, static_cast<unsigned long long>(r.warnings),
                 static_cast<unsigned long long>(r.scans),
                 static_cast<unsigned long long>(r.freed), r.rss_peak);
  }
  bool ok = std::fclose(f) == 0;
  return ok;
}

std::optional<std::vector<RunRow>> parse_csv(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (f == nullptr) return std::nullopt;
  char line[512];
  if (std::fgets(line, sizeof line, f) == nullptr) {  // header
    std::fclose(f);
    return std::nullopt;
  }
  std::vector<RunRow> rows;
  while (std::fgets(line, sizeof line, f) != nullptr) {
    char structure[16], scheme[16], backend[16];
    RunRow r;
    unsigned long long ops = 0, warnings = 0, scans = 0, freed = 0;
    int n = std::sscanf(line, "%15[^,],%15[^,],%15[^,],%u,%u,%llu,%lf,%lf,%llu,%llu,%llu,%ld",
                        structure, scheme, backend, &r.threads, &r.run, &ops,
                        &r.seconds, &r.throughput, &warnings, &scans, &freed,
                        &r.rss_peak);
    if (n != 12) {
      std::fclose(f);
      return std::nullopt;
    }
    r.ops = ops;
    r.warnings = warnings;
    r.scans = scans;
    r.freed = freed;
    rows.push_back(std::move(r));
  }
  std::fclose(f);
  return rows;
}

}  // namespace oam::bench
