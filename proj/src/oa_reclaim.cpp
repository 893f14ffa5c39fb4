#include "oamalloc/oa_reclaim.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <unordered_map>

#include "oamalloc/alloc_api.hpp"

namespace oam::reclaim {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Bit: return "bit";
    case Scheme::Ver: return "ver";
    case Scheme::None: return "none";
  }
  return "?";
}

namespace {

struct HandleRegistry {
  std::unordered_map<Domain*, Handle> handles;
};

thread_local HandleRegistry tl_handles;

}  // namespace

Domain::Domain(Config cfg) : cfg_(cfg) {
  assert(cfg_.hazard_slots <= kMaxHazardSlots);
  assert(cfg_.limbo_capacity > 0);
  if (cfg_.free_fn == nullptr) cfg_.free_fn = &oam::free_;
}

Domain::~Domain() { tl_handles.handles.erase(this); }

ThreadRecord* Domain::acquire_record() {
  std::size_t n = record_count_.load(std::memory_order_acquire);
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord* r = records_[i].load(std::memory_order_acquire);
    bool expected = false;
    if (r != nullptr &&
        r->in_use.compare_exchange_strong(expected, true,
                                          std::memory_order_acq_rel)) {
      r->warning_bit.store(false, std::memory_order_relaxed);
      r->local_clock = clock_.load(std::memory_order_acquire);
      r->last_retire_time = r->local_clock;
      for (auto& h : r->hazards) h.store(nullptr, std::memory_order_relaxed);
      r->limbo.clear();
      return r;
    }
  }
  std::size_t idx = record_count_.fetch_add(1, std::memory_order_acq_rel);
  if (idx >= kMaxThreads) {
    std::fprintf(stderr, "oamalloc: reclaim thread registry exhausted\n");
    std::abort();
  }
  auto* r = new ThreadRecord();  // never deleted; slot reused across threads
  r->in_use.store(true, std::memory_order_relaxed);
  r->local_clock = clock_.load(std::memory_order_acquire);
  r->last_retire_time = r->local_clock;
  records_[idx].store(r, std::memory_order_release);
  return r;
}

Handle Domain::register_thread() { return Handle(this, acquire_record()); }

Handle& Domain::local_handle() {
  auto it = tl_handles.handles.find(this);
  if (it == tl_handles.handles.end())
    it = tl_handles.handles.emplace(this, register_thread()).first;
  return it->second;
}

void Domain::push_orphan(void* node) {
  auto* o = new Orphan{node, orphans_.load(std::memory_order_acquire)};
  while (!orphans_.compare_exchange_weak(o->next, o,
                                         std::memory_order_acq_rel,
                                         std::memory_order_acquire)) {
  }
  orphan_count_.fetch_add(1, std::memory_order_relaxed);
}

void Domain::broadcast_warnings() {
  // Warning delivery: every registered thread, our own bit included.
  std::size_t n = std::min(record_count_.load(std::memory_order_acquire),
                           kMaxThreads);
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord* r = records_[i].load(std::memory_order_acquire);
    if (r != nullptr) r->warning_bit.store(true, std::memory_order_release);
  }
  broadcasts_.fetch_add(1, std::memory_order_relaxed);
}

void Domain::scan(ThreadRecord& self) {
  // Warning emission happened before this point; the fence orders it ahead
  // of the hazard snapshot.
  std::atomic_thread_fence(std::memory_order_seq_cst);

  std::vector<void*> snapshot;
  std::size_t n = std::min(record_count_.load(std::memory_order_acquire),
                           kMaxThreads);
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord* r = records_[i].load(std::memory_order_acquire);
    if (r == nullptr) continue;
    for (std::uint32_t k = 0; k < cfg_.hazard_slots; ++k) {
      void* h = r->hazards[k].load(std::memory_order_acquire);
      if (h != nullptr) snapshot.push_back(h);
    }
  }
  std::sort(snapshot.begin(), snapshot.end());
  auto protected_ = [&](void* p) {
    return std::binary_search(snapshot.begin(), snapshot.end(), p);
  };

  std::vector<void*> freed;
  std::vector<void*> kept;
  kept.reserve(self.limbo.size());
  for (void* node : self.limbo) {
    if (protected_(node)) {
      kept.push_back(node);
    } else {
      freed.push_back(node);
    }
  }
  self.limbo.swap(kept);

  // Limbo handed over by exited threads is everyone's responsibility.
  Orphan* o = orphans_.exchange(nullptr, std::memory_order_acq_rel);
  while (o != nullptr) {
    Orphan* next = o->next;
    orphan_count_.fetch_sub(1, std::memory_order_relaxed);
    if (protected_(o->node)) {
      push_orphan(o->node);
    } else {
      freed.push_back(o->node);
    }
    delete o;
    o = next;
  }

  for (void* node : freed) cfg_.free_fn(node);
  freed_.fetch_add(freed.size(), std::memory_order_relaxed);
  scans_.fetch_add(1, std::memory_order_relaxed);
  if (observer_ != nullptr) observer_(observer_user_, freed, snapshot);
}

std::uint64_t Domain::limbo_count() const {
  // Only meaningful at quiescence (no concurrent retires).
  std::uint64_t total = orphan_count_.load(std::memory_order_acquire);
  std::size_t n = std::min(record_count_.load(std::memory_order_acquire),
                           kMaxThreads);
  for (std::size_t i = 0; i < n; ++i) {
    ThreadRecord* r = records_[i].load(std::memory_order_acquire);
    if (r != nullptr) total += r->limbo.size();
  }
  return total;
}

Handle::Handle(Handle&& other) noexcept
    : domain_(other.domain_), rec_(other.rec_) {
  other.domain_ = nullptr;
  other.rec_ = nullptr;
}

Handle& Handle::operator=(Handle&& other) noexcept {
  if (this != &other) {
    release();
    domain_ = other.domain_;
    rec_ = other.rec_;
    other.domain_ = nullptr;
    other.rec_ = nullptr;
  }
  return *this;
}

void Handle::release() {
  if (rec_ == nullptr) return;
  for (auto& h : rec_->hazards) h.store(nullptr, std::memory_order_release);
  for (void* node : rec_->limbo) domain_->push_orphan(node);
  rec_->limbo.clear();
  rec_->in_use.store(false, std::memory_order_release);
  rec_ = nullptr;
  domain_ = nullptr;
}

bool Handle::check_warning() {
  switch (domain_->cfg_.scheme) {
    case Scheme::Bit:
      if (rec_->warning_bit.load(std::memory_order_acquire)) {
        rec_->warning_bit.store(false, std::memory_order_release);
        return true;
      }
      return false;
    case Scheme::Ver: {
      std::uint64_t g = domain_->clock_.load(std::memory_order_acquire);
      if (g > rec_->local_clock) {
        rec_->local_clock = g;
        return true;
      }
      return false;
    }
    case Scheme::None:
      return false;
  }
  return false;
}

void Handle::set_hazard(std::uint32_t slot, void* addr) {
  assert(slot < domain_->cfg_.hazard_slots);
  rec_->hazards[slot].store(addr, std::memory_order_release);
}

bool Handle::validate() {
  if (domain_->cfg_.scheme == Scheme::None) return true;
  // Hazard publication must be ordered before the warning read. On TSO this
  // is the one expensive barrier of a writing operation.
  std::atomic_thread_fence(std::memory_order_seq_cst);
  return !check_warning();
}

void Handle::unprotect_all() {
  for (std::uint32_t k = 0; k < domain_->cfg_.hazard_slots; ++k)
    rec_->hazards[k].store(nullptr, std::memory_order_release);
}

void Handle::retire(void* node) {
  switch (domain_->cfg_.scheme) {
    case Scheme::Bit:
      retire_bit(node);
      break;
    case Scheme::Ver:
      retire_ver(node);
      break;
    case Scheme::None:
      break;  // NR: never reclaimed, reused or freed
  }
}

void Handle::retire_bit(void* node) {
  domain_->retired_.fetch_add(1, std::memory_order_relaxed);
  rec_->limbo.push_back(node);
  if (rec_->limbo.size() >= domain_->cfg_.limbo_capacity) {
    domain_->broadcast_warnings();
    domain_->scan(*rec_);
  }
}

void Handle::retire_ver(void* node) {
  Domain& d = *domain_;
  if (rec_->limbo.size() >= d.cfg_.limbo_capacity) {
    if (rec_->last_retire_time == rec_->local_clock) {
      std::uint64_t expected = rec_->local_clock;
      if (d.clock_.compare_exchange_strong(expected, rec_->local_clock + 1,
                                           std::memory_order_seq_cst)) {
        d.clock_increments_.fetch_add(1, std::memory_order_relaxed);
      }
      // A failed CAS means another thread fired a warning: reuse it.
      rec_->local_clock = d.clock_.load(std::memory_order_acquire);
    }
  }
  if (rec_->last_retire_time < rec_->local_clock &&
      rec_->limbo.size() > d.cfg_.scan_threshold) {
    d.scan(*rec_);
  }
  rec_->last_retire_time = rec_->local_clock;
  d.retired_.fetch_add(1, std::memory_order_relaxed);
  rec_->limbo.push_back(node);
}

}  // namespace oam::reclaim
