#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <vector>

namespace oam::reclaim {

enum class Scheme { Bit, Ver, None };  // None = no-reclamation baseline

const char* scheme_name(Scheme s);

inline constexpr std::uint32_t kMaxHazardSlots = 8;

struct Config {
  Scheme scheme = Scheme::Ver;
  std::uint32_t limbo_capacity = 64;  // R: retires between scans
  std::uint32_t scan_threshold = 32;  // X: minimum limbo size for a VER scan
  std::uint32_t hazard_slots = 3;     // K: prev, curr, next
  void (*free_fn)(void*) = nullptr;   // defaults to oam::free_
};

enum class ProtectResult { Valid, MustRestart };

// Owner-written except warning_bit (set by any reclaimer) and the hazard
// slots (read by every scanner). Records are never deallocated; slots are
// reused across thread lifetimes.
struct ThreadRecord {
  std::atomic<bool> warning_bit{false};
  std::uint64_t local_clock = 0;
  std::uint64_t last_retire_time = 0;
  std::array<std::atomic<void*>, kMaxHazardSlots> hazards{};
  std::vector<void*> limbo;
  std::atomic<bool> in_use{false};
};

class Domain;

// Per-thread access to one domain. Obtained from Domain::local_handle() (or
// register_thread() when a test drives several logical threads itself).
class Handle {
 public:
  Handle() = default;
  Handle(Handle&& other) noexcept;
  Handle& operator=(Handle&& other) noexcept;
  ~Handle() { release(); }

  bool valid() const { return rec_ != nullptr; }

  // True exactly once per pending warning; BIT clears the bit, VER refreshes
  // the local clock. Warnings between two checks coalesce.
  bool check_warning();

  // Publish without validating; pair with one validate() for several slots.
  void set_hazard(std::uint32_t slot, void* addr);

  // Ordering barrier, then warning check. False means some node read since
  // the previous check may be gone: restart from a valid root.
  bool validate();

  ProtectResult protect(std::uint32_t slot, void* addr) {
    set_hazard(slot, addr);
    return validate() ? ProtectResult::Valid : ProtectResult::MustRestart;
  }

  void unprotect_all();

  // Node must be unlinked and retired at most once. Dispatches on the
  // domain's scheme; None leaks the node by design.
  void retire(void* node);

  void release();  // hand limbo to the domain's orphan list, free the record

  ThreadRecord& record() { return *rec_; }

 private:
  friend class Domain;
  Handle(Domain* d, ThreadRecord* r) : domain_(d), rec_(r) {}

  void retire_bit(void* node);
  void retire_ver(void* node);

  Domain* domain_ = nullptr;
  ThreadRecord* rec_ = nullptr;
};

// One reclamation domain: thread registry, global clock, orphan limbo, and
// counters. Data structures fix their scheme here at construction.
class Domain {
 public:
  explicit Domain(Config cfg);
  ~Domain();
  Domain(const Domain&) = delete;
  Domain& operator=(const Domain&) = delete;

  const Config& config() const { return cfg_; }
  Scheme scheme() const { return cfg_.scheme; }

  Handle register_thread();
  Handle& local_handle();

  // Called after every scan with the nodes it freed and the hazard snapshot
  // it honored. Test instrumentation.
  using ScanObserver = void (*)(void* user, const std::vector<void*>& freed,
                                const std::vector<void*>& snapshot);
  void set_scan_observer(ScanObserver obs, void* user) {
    observer_ = obs;
    observer_user_ = user;
  }

  std::uint64_t retired_count() const { return retired_.load(std::memory_order_relaxed); }
  std::uint64_t freed_count() const { return freed_.load(std::memory_order_relaxed); }
  std::uint64_t scan_count() const { return scans_.load(std::memory_order_relaxed); }
  std::uint64_t broadcast_rounds() const { return broadcasts_.load(std::memory_order_relaxed); }
  std::uint64_t clock_increments() const { return clock_increments_.load(std::memory_order_relaxed); }
  std::uint64_t clock_value() const { return clock_.load(std::memory_order_relaxed); }
  // Warning events under the active scheme (broadcast rounds or increments).
  std::uint64_t warning_events() const {
    return cfg_.scheme == Scheme::Bit ? broadcast_rounds() : clock_increments();
  }
  // Nodes parked in limbo lists (registered threads + orphans).
  std::uint64_t limbo_count() const;

 private:
  friend class Handle;

  static constexpr std::size_t kMaxThreads = 1024;

  struct Orphan {
    void* node;
    Orphan* next;
  };

  ThreadRecord* acquire_record();
  void broadcast_warnings();
  // Frees every unprotected node in the caller's limbo plus the orphans.
  void scan(ThreadRecord& self);
  void push_orphan(void* node);

  Config cfg_;
  std::atomic<std::uint64_t> clock_{0};
  std::atomic<ThreadRecord*> records_[kMaxThreads] = {};
  std::atomic<std::size_t> record_count_{0};
  std::atomic<Orphan*> orphans_{nullptr};
  std::atomic<std::uint64_t> orphan_count_{0};

  std::atomic<std::uint64_t> retired_{0};
  std::atomic<std::uint64_t> freed_{0};
  std::atomic<std::uint64_t> scans_{0};
  std::atomic<std::uint64_t> broadcasts_{0};
  std::atomic<std::uint64_t> clock_increments_{0};

  ScanObserver observer_ = nullptr;
  void* observer_user_ = nullptr;
};

}  // namespace oam::reclaim
