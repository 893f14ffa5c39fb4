#pragma once

#include <cstddef>
#include <functional>

#include "oamalloc/heap.hpp"
#include "oamalloc/thread_cache.hpp"

namespace oam {

struct AllocatorConfig {
  BackendKind backend = BackendKind::KeepResident;
  std::size_t shared_region_len = kSuperblockSize;
  std::size_t cache_capacity = kDefaultCacheCapacity;
};

// Allocator facade: regular allocation/free plus the persistent entry point.
// An instance owns a heap and hands each calling thread its own cache.
// Instances are never meant to be destroyed while other threads still hold
// blocks; persistent superblocks outlive the instance by design.
class Allocator {
 public:
  explicit Allocator(AllocatorConfig cfg = {});
  ~Allocator();

  void* malloc_(std::size_t size);
  void free_(void* addr);

  // Block from a persistent superblock: the returned address stays readable
  // for the process lifetime, even after free_. Sizes above the largest
  // class are unsupported and return nullptr.
  void* palloc(std::size_t size);

  // Flushes the calling thread's cache back to the heap (forces retirement
  // of superblocks it was keeping alive).
  void drain_thread_cache();

  Heap& heap() { return heap_; }
  const AllocatorConfig& config() const { return cfg_; }

  ThreadCache& local_cache();

 private:
  AllocatorConfig cfg_;
  Heap heap_;
};

// Process-wide allocator used by the exported entry points. Configured from
// the OAMALLOC_BACKEND environment variable ({keep, advise, shared}) unless
// init_global_allocator ran first.
Allocator& global_allocator();

// Must be called before the first use of the global entry points; fatal
// otherwise.
void init_global_allocator(AllocatorConfig cfg);

void* malloc_(std::size_t size);
void free_(void* addr);
void* palloc(std::size_t size);

}  // namespace oam
