#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <set>

#include "oamalloc/bench.hpp"

using namespace oam;
using namespace oam::bench;

namespace {

WorkloadConfig quick() {
  WorkloadConfig c;
  c.prefill = 200;
  c.threads = 2;
  c.duration_s = 0.15;
  c.warmup_s = 0.02;
  c.runs = 2;
  c.limbo_capacity = 8;
  c.scan_threshold = 4;
  return c;
}

}  // namespace

TEST_CASE("structure names") {
  CHECK(std::strcmp(structure_name(Structure::List), "list") == 0);
  CHECK(std::strcmp(structure_name(Structure::Map), "map") == 0);
}

TEST_CASE("config validation rejects each malformed field") {
  WorkloadConfig c = quick();
  CHECK(!c.validate().has_value());

  WorkloadConfig bad = c;
  bad.search_pct = 60;  // 60+25+25 != 100
  CHECK(bad.validate().has_value());

  bad = c;
  bad.search_pct = 40;
  bad.insert_pct = 40;
  bad.remove_pct = 20;  // sums to 100 but ratio not 1:1
  CHECK(bad.validate().has_value());

  bad = c;
  bad.search_pct = -10;
  bad.insert_pct = 60;
  bad.remove_pct = 50;
  CHECK(bad.validate().has_value());

  bad = c;
  bad.threads = 0;
  CHECK(bad.validate().has_value());

  bad = c;
  bad.runs = 0;
  CHECK(bad.validate().has_value());

  bad = c;
  bad.duration_s = 0;
  CHECK(bad.validate().has_value());

  bad = c;
  bad.scan_threshold = bad.limbo_capacity;  // X must stay below R
  CHECK(bad.validate().has_value());

  bad = c;
  bad.hazard_slots = 2;
  CHECK(bad.validate().has_value());
  bad.hazard_slots = 9;
  CHECK(bad.validate().has_value());
}

TEST_CASE("key range doubles the prefill") {
  WorkloadConfig c;
  c.prefill = 10000;
  CHECK(c.key_range() == 20000);
  c.prefill = 0;
  CHECK(c.key_range() == 2);
}

TEST_CASE("invalid config produces an empty report") {
  WorkloadConfig c = quick();
  c.threads = 0;
  RunReport r = run_benchmark(c);
  CHECK(r.rows.empty());
}

TEST_CASE("report rows carry consistent per-run data") {
  WorkloadConfig c = quick();
  RunReport r = run_benchmark(c);
  REQUIRE(r.rows.size() == c.runs);
  for (unsigned i = 0; i < c.runs; ++i) {
    const RunRow& row = r.rows[i];
    CHECK(row.run == i);
    CHECK(row.threads == c.threads);
    CHECK(row.ops > 0);
    CHECK(row.seconds >= c.duration_s * 0.9);
    CHECK(row.per_thread_ops.size() == c.threads);
    std::uint64_t sum = 0;
    for (auto n : row.per_thread_ops) sum += n;
    CHECK(sum == row.ops);
    CHECK(row.throughput == doctest::Approx(row.ops / row.seconds));
    CHECK(row.rss_peak > 0);
  }
  CHECK(r.throughput_mean() > 0);
  CHECK(r.throughput_stddev() >= 0);
}

TEST_CASE("pure-search workload leaves the structure at its prefill size") {
  WorkloadConfig c = quick();
  c.search_pct = 100;
  c.insert_pct = 0;
  c.remove_pct = 0;
  c.runs = 1;
  for (Structure s : {Structure::List, Structure::Map}) {
    c.structure = s;
    c.prefill = s == Structure::List ? 100 : 300;
    RunReport r = run_benchmark(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.final_keys.size() == c.prefill);
    // All keys inside the configured range, no duplicates.
    std::set<std::int64_t> uniq(r.final_keys.begin(), r.final_keys.end());
    CHECK(uniq.size() == r.final_keys.size());
    for (auto k : r.final_keys) {
      CHECK(k >= 0);
      CHECK(k < static_cast<std::int64_t>(c.key_range()));
    }
  }
}

TEST_CASE("mixed workload keys stay within range and reclamation runs") {
  WorkloadConfig c = quick();
  c.scheme = reclaim::Scheme::Ver;
  c.runs = 1;
  c.duration_s = 0.3;
  RunReport r = run_benchmark(c);
  REQUIRE(r.rows.size() == 1);
  // 25% removes at R=8 must trigger scans and frees.
  CHECK(r.rows[0].scans > 0);
  CHECK(r.rows[0].freed > 0);
  CHECK(r.rows[0].warnings > 0);
  for (auto k : r.final_keys)
    CHECK(k < static_cast<std::int64_t>(c.key_range()));
}

TEST_CASE("no-reclamation baseline never frees or warns") {
  WorkloadConfig c = quick();
  c.scheme = reclaim::Scheme::None;
  c.runs = 1;
  RunReport r = run_benchmark(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].freed == 0);
  CHECK(r.rows[0].scans == 0);
  CHECK(r.rows[0].warnings == 0);
}

TEST_CASE("csv round-trips through emit and parse") {
  WorkloadConfig c = quick();
  RunReport r = run_benchmark(c);
  REQUIRE(!r.rows.empty());
  const char* path = "/tmp/oam_bench_test.csv";
  REQUIRE(emit_csv(r, path));
  auto rows = parse_csv(path);
  REQUIRE(rows.has_value());
  REQUIRE(rows->size() == r.rows.size());
  for (std::size_t i = 0; i < rows->size(); ++i) {
    CHECK((*rows)[i].threads == r.rows[i].threads);
    CHECK((*rows)[i].run == r.rows[i].run);
    CHECK((*rows)[i].ops == r.rows[i].ops);
    CHECK((*rows)[i].seconds == doctest::Approx(r.rows[i].seconds));
    CHECK((*rows)[i].throughput ==
          doctest::Approx(r.rows[i].throughput).epsilon(0.001));
    CHECK((*rows)[i].warnings == r.rows[i].warnings);
    CHECK((*rows)[i].scans == r.rows[i].scans);
    CHECK((*rows)[i].freed == r.rows[i].freed);
    CHECK((*rows)[i].rss_peak == r.rows[i].rss_peak);
  }
  std::remove(path);

  CHECK(!parse_csv("/tmp/does_not_exist_oam.csv").has_value());
  // Malformed body line.
  FILE* f = std::fopen(path, "w");
  std::fprintf(f, "header\nnot,enough,fields\n");
  std::fclose(f);
  CHECK(!parse_csv(path).has_value());
  std::remove(path);
}

TEST_CASE("emit_csv fails cleanly on an unwritable path") {
  RunReport r;
  CHECK(!emit_csv(r, "/nonexistent-dir/x.csv"));
}
