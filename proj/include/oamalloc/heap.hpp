#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>

#include "oamalloc/pagemap.hpp"
#include "oamalloc/size_classes.hpp"
#include "oamalloc/vm_backend.hpp"

namespace oam {

inline constexpr std::uint32_t kNilIndex = 0xffffffffu;
inline constexpr std::uint32_t kEndOfList = 0xffffffffu;  // in-superblock chain

enum class SbState : std::uint32_t { Full = 0, Partial = 1, Empty = 2 };

// Superblock state packed into one CAS-able word:
//   [tag:26][count:18][avail:18][state:2]
// Every successful transition bumps the tag, so a CAS against a stale
// snapshot always fails.
struct Anchor {
  SbState state = SbState::Full;
  std::uint32_t avail = 0;  // index of the first free block (valid iff count>0)
  std::uint32_t count = 0;  // number of free blocks
  std::uint64_t tag = 0;

  std::uint64_t pack() const {
    assert(avail < (1u << 18) && count <= (1u << 18));
    return static_cast<std::uint64_t>(state) |
           (static_cast<std::uint64_t>(avail) << 2) |
           (static_cast<std::uint64_t>(count) << 20) |
           ((tag & ((std::uint64_t{1} << 26) - 1)) << 38);
  }
  static Anchor unpack(std::uint64_t w) {
    Anchor a;
    a.state = static_cast<SbState>(w & 0x3);
    a.avail = static_cast<std::uint32_t>((w >> 2) & ((1u << 18) - 1));
    a.count = static_cast<std::uint32_t>((w >> 20) & ((1u << 18) - 1));
    a.tag = w >> 38;
    return a;
  }
};

// Superblock metadata. Never deallocated; recycled through the descriptor
// pools when its superblock dies.
struct Descriptor {
  std::atomic<std::uint64_t> anchor{0};
  std::byte* base = nullptr;
  std::size_t length = 0;
  std::uint32_t size_class = 0;  // kLargeClass for large allocations
  std::uint32_t block_count = 0;
  bool persistent = false;
  std::atomic<bool> active{false};  // owns a live (or neutralized) superblock
  std::uint32_t id = kNilIndex;
  std::atomic<std::uint32_t> pool_next{kNilIndex};

  Anchor load_anchor(std::memory_order mo = std::memory_order_acquire) const {
    return Anchor::unpack(anchor.load(mo));
  }
  std::byte* block_at(std::uint32_t idx) const {
    return base + static_cast<std::size_t>(idx) * kClassSizes[size_class];
  }
};

// Node for the partial-superblock lists. Listed entries are hints: a
// descriptor may be retired and reused while a stale node still names it, so
// consumers revalidate against the anchor before taking blocks.
struct PartialNode {
  Descriptor* desc = nullptr;
  std::atomic<std::uint32_t> next{kNilIndex};
};

// Bump allocator over a lazily-committed reservation. Objects are never
// destroyed or unmapped.
template <typename T>
class Slab {
 public:
  explicit Slab(std::size_t capacity);
  ~Slab() = default;
  Slab(const Slab&) = delete;
  Slab& operator=(const Slab&) = delete;

  T* create();  // nullptr when the slab is exhausted
  T& operator[](std::size_t i) { return items_[i]; }
  const T& operator[](std::size_t i) const { return items_[i]; }
  std::size_t count() const { return count_.load(std::memory_order_acquire); }
  std::uint32_t index_of(const T* p) const {
    return static_cast<std::uint32_t>(p - items_);
  }

 private:
  T* items_;
  std::size_t capacity_;
  std::atomic<std::size_t> count_{0};
};

// Treiber stack of slab indices with a tagged head (index:32 | tag:32).
// NextOf maps an index to its atomic next field.
class TaggedIndexStack {
 public:
  template <typename NextOf>
  void push(std::uint32_t idx, NextOf&& next_of) {
    std::uint64_t head = head_.load(std::memory_order_acquire);
    for (;;) {
      next_of(idx).store(static_cast<std::uint32_t>(head),
                         std::memory_order_relaxed);
      std::uint64_t fresh =
          (((head >> 32) + 1) << 32) | idx;
      if (head_.compare_exchange_weak(head, fresh, std::memory_order_acq_rel,
                                      std::memory_order_acquire)) {
        size_.fetch_add(1, std::memory_order_relaxed);
        return;
      }
    }
  }

  template <typename NextOf>
  std::uint32_t pop(NextOf&& next_of) {
    std::uint64_t head = head_.load(std::memory_order_acquire);
    for (;;) {
      auto idx = static_cast<std::uint32_t>(head);
      if (idx == kNilIndex) return kNilIndex;
      std::uint32_t nxt = next_of(idx).load(std::memory_order_relaxed);
      std::uint64_t fresh = (((head >> 32) + 1) << 32) | nxt;
      if (head_.compare_exchange_weak(head, fresh, std::memory_order_acq_rel,
                                      std::memory_order_acquire)) {
        size_.fetch_sub(1, std::memory_order_relaxed);
        return idx;
      }
    }
  }

  std::size_t size() const { return size_.load(std::memory_order_acquire); }

 private:
  std::atomic<std::uint64_t> head_{kNilIndex};  // tag 0, empty
  std::atomic<std::size_t> size_{0};
};

// Manages superblocks through descriptors: carving, full/partial/empty
// transitions, the persistent flag, and the two descriptor-recycling pools.
// Fully lock-free; any thread may call any operation.
class Heap {
 public:
  explicit Heap(BackendKind backend,
                std::size_t shared_region_len = kSuperblockSize);
  Heap(const Heap&) = delete;
  Heap& operator=(const Heap&) = delete;

  VmBackend& vm() { return vm_; }
  const PageMap& pagemap() const { return pagemap_; }

  // Fills out[0..want) with blocks of the class, preferring partial
  // superblocks of matching class and persistence. Returns the number
  // obtained (< want only on OS out-of-memory).
  std::size_t fill(std::uint32_t cls, bool persistent, void** out,
                   std::size_t want);

  // Returns one block to its superblock's free list. Full->Partial lists the
  // superblock; a count reaching block_count retires it.
  void flush_one(void* block);

  void* alloc_large(std::size_t size);
  void free_large(Descriptor* d);

  Descriptor* descriptor_for(const void* addr) const {
    return pagemap_.lookup(addr);
  }

  // Introspection (tests, stats).
  std::size_t descriptor_count() const { return descs_.count(); }
  Descriptor& descriptor_at(std::size_t i) { return descs_[i]; }
  std::size_t generic_pool_size() const { return generic_pool_.size(); }
  std::size_t persistent_pool_size() const { return persistent_pool_.size(); }
  std::uint64_t fill_calls() const {
    return fill_calls_.load(std::memory_order_relaxed);
  }
  std::uint64_t flush_calls() const {
    return flush_calls_.load(std::memory_order_relaxed);
  }

 private:
  Descriptor* new_superblock(std::uint32_t cls, bool persistent);
  void retire_superblock(Descriptor* d);
  void push_partial(Descriptor* d);
  bool take_all_blocks(Descriptor* d, std::uint32_t cls, bool persistent,
                       Anchor& taken);
  // Pushes the pre-linked chain first..last (n blocks) back onto d's free
  // list with a single CAS loop.
  void push_chain(Descriptor* d, std::uint32_t first, std::uint32_t last,
                  std::uint32_t n);

  TaggedIndexStack& partial_list(std::uint32_t cls, bool persistent) {
    return partial_[cls * 2 + (persistent ? 1 : 0)];
  }

  std::uint32_t& block_link(Descriptor* d, std::uint32_t idx) {
    return *reinterpret_cast<std::uint32_t*>(d->block_at(idx));
  }

  VmBackend vm_;
  PageMap pagemap_;
  Slab<Descriptor> descs_;
  Slab<PartialNode> nodes_;
  TaggedIndexStack node_free_;
  TaggedIndexStack generic_pool_;
  TaggedIndexStack persistent_pool_;
  TaggedIndexStack partial_[kNumClasses * 2];
  std::atomic<std::uint64_t> fill_calls_{0};
  std::atomic<std::uint64_t> flush_calls_{0};
};

}  // namespace oam
