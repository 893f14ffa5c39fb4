#pragma once

#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

#include "oamalloc/heap.hpp"

namespace oam {

inline constexpr std::size_t kDefaultCacheCapacity = 64;

// Per-thread bounded stacks of free blocks, one per (class, persistence)
// pair. Owner-thread only; all synchronization happens in the heap on
// fill/flush.
class ThreadCache {
 public:
  explicit ThreadCache(Heap* heap,
                       std::size_t capacity = kDefaultCacheCapacity)
      : heap_(heap), capacity_(capacity), owner_(std::this_thread::get_id()) {}
  ~ThreadCache() { drain(); }
  ThreadCache(const ThreadCache&) = delete;
  ThreadCache& operator=(const ThreadCache&) = delete;

  void* alloc(std::uint32_t cls, bool persistent) {
    assert(owner_ == std::this_thread::get_id());
    auto& st = stack(cls, persistent);
    if (st.empty()) {
      st.resize(capacity_);
      std::size_t got = heap_->fill(cls, persistent, st.data(), capacity_);
      st.resize(got);
      if (got == 0) return nullptr;
    }
    void* p = st.back();
    st.pop_back();
    return p;
  }

  // addr may have been allocated on another thread; the pagemap identifies
  // its class and persistence.
  void free(void* addr) {
    assert(owner_ == std::this_thread::get_id());
    Descriptor* d = heap_->descriptor_for(addr);
    if (d == nullptr || d->size_class == kLargeClass) {
      std::fprintf(stderr, "oamalloc: invalid free of %p\n", addr);
      std::abort();
    }
    auto& st = stack(d->size_class, d->persistent);
    if (st.size() >= capacity_) {
      // Flush the oldest half; halving avoids ping-pong at the boundary.
      std::size_t n = capacity_ / 2;
      for (std::size_t i = 0; i < n; ++i) heap_->flush_one(st[i]);
      st.erase(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(n));
    }
    st.push_back(addr);
  }

  void drain() {
    for (auto& st : stacks_) {
      for (void* p : st) heap_->flush_one(p);
      st.clear();
    }
  }

  std::size_t cached_blocks() const {
    std::size_t n = 0;
    for (const auto& st : stacks_) n += st.size();
    return n;
  }

  std::size_t cached_in(std::uint32_t cls, bool persistent) const {
    return stacks_[cls * 2 + (persistent ? 1 : 0)].size();
  }

 private:
  std::vector<void*>& stack(std::uint32_t cls, bool persistent) {
    return stacks_[cls * 2 + (persistent ? 1 : 0)];
  }

  Heap* heap_;
  std::size_t capacity_;
  std::thread::id owner_;
  std::vector<void*> stacks_[kNumClasses * 2];
};

}  // namespace oam
