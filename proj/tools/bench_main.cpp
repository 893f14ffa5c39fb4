#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "oamalloc/alloc_api.hpp"
#include "oamalloc/bench.hpp"

namespace {

bool parse_sweep(const std::string& spec, unsigned& lo, unsigned& hi) {
  unsigned a = 0, b = 0;
  if (std::sscanf(spec.c_str(), "%u..%u", &a, &b) != 2) return false;
  if (a == 0 || b < a) return false;
  lo = a;
  hi = b;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lock-free structure benchmark harness"};

  oam::bench::WorkloadConfig cfg;
  std::string structure = "map";
  std::string scheme = "ver";
  std::string backend = "keep";
  std::string sweep;
  std::string csv_path;
  unsigned threads = 1;

  app.add_option("--structure", structure, "list | map")
      ->check(CLI::IsMember({"list", "map"}));
  app.add_option("--prefill", cfg.prefill, "nodes inserted before timing");
  app.add_option("--search", cfg.search_pct, "search percentage");
  app.add_option("--insert", cfg.insert_pct, "insert percentage");
  app.add_option("--remove", cfg.remove_pct, "remove percentage");
  auto* topt = app.add_option("--threads", threads, "worker thread count");
  auto* sopt =
      app.add_option("--sweep", sweep, "thread sweep, e.g. 1..32");
  sopt->excludes(topt);
  app.add_option("--duration", cfg.duration_s, "seconds per run");
  app.add_option("--runs", cfg.runs, "independent runs per configuration");
  app.add_option("--scheme", scheme, "bit | ver | none")
      ->check(CLI::IsMember({"bit", "ver", "none"}));
  app.add_option("--backend", backend, "keep | advise | shared")
      ->check(CLI::IsMember({"keep", "advise", "shared"}));
  app.add_option("--seed", cfg.seed, "base PRNG seed");
  app.add_option("--limbo", cfg.limbo_capacity, "limbo list capacity (R)");
  app.add_option("--scan-threshold", cfg.scan_threshold,
                 "minimum limbo size for a VER scan (X)");
  app.add_option("--hazards", cfg.hazard_slots, "hazard slots per thread (K)");
  app.add_option("--csv", csv_path, "write per-run rows to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  cfg.structure = structure == "list" ? oam::bench::Structure::List
                                      : oam::bench::Structure::Map;
  cfg.scheme = scheme == "bit"   ? oam::reclaim::Scheme::Bit
               : scheme == "ver" ? oam::reclaim::Scheme::Ver
                                 : oam::reclaim::Scheme::None;
  cfg.backend = backend == "keep"     ? oam::BackendKind::KeepResident
                : backend == "advise" ? oam::BackendKind::AdviseRelease
                                      : oam::BackendKind::SharedRemap;

  unsigned lo = threads, hi = threads;
  if (!sweep.empty() && !parse_sweep(sweep, lo, hi)) {
    std::fprintf(stderr, "bench: bad --sweep '%s' (expected LO..HI)\n",
                 sweep.c_str());
    return 2;
  }
  cfg.threads = lo;
  if (auto err = cfg.validate()) {
    std::fprintf(stderr, "bench: %s\n", err->c_str());
    return 2;
  }

  oam::AllocatorConfig acfg;
  acfg.backend = cfg.backend;
  oam::init_global_allocator(acfg);

  oam::bench::RunReport combined;
  combined.cfg = cfg;
  for (unsigned t = lo; t <= hi; ++t) {
    cfg.threads = t;
    auto report = oam::bench::run_benchmark(cfg);
    std::printf(
        "%s scheme=%s backend=%s threads=%u  mean %.0f ops/s (sd %.0f)  "
        "warnings=%llu scans=%llu freed=%llu\n",
        oam::bench::structure_name(cfg.structure),
        oam::reclaim::scheme_name(cfg.scheme), oam::backend_name(cfg.backend),
        t, report.throughput_mean(), report.throughput_stddev(),
        static_cast<unsigned long long>(
            report.rows.empty() ? 0 : report.rows.back().warnings),
        static_cast<unsigned long long>(
            report.rows.empty() ? 0 : report.rows.back().scans),
        static_cast<unsigned long long>(
            report.rows.empty() ? 0 : report.rows.back().freed));
    for (auto& r : report.rows) combined.rows.push_back(std::move(r));
  }

  if (!csv_path.empty() && !oam::bench::emit_csv(combined, csv_path)) {
    std::fprintf(stderr, "bench: cannot write %s\n", csv_path.c_str());
    return 1;
  }
  return 0;
}
