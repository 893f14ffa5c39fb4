#include "oamalloc/heap.hpp"

#include <sys/mman.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace oam {

namespace {
constexpr std::size_t kDescriptorCapacity = std::size_t{1} << 20;
constexpr std::size_t kNodeCapacity = std::size_t{1} << 20;
}  // namespace

template <typename T>
Slab<T>::Slab(std::size_t capacity) : capacity_(capacity) {
  void* p = ::mmap(nullptr, capacity * sizeof(T), PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (p == MAP_FAILED) {
    std::fprintf(stderr, "oamalloc: slab reservation failed\n");
    std::abort();
  }
  items_ = static_cast<T*>(p);
}

template <typename T>
T* Slab<T>::create() {
  std::size_t i = count_.fetch_add(1, std::memory_order_acq_rel);
  if (i >= capacity_) {
    count_.fetch_sub(1, std::memory_order_acq_rel);
    return nullptr;
  }
  return new (&items_[i]) T();
}

template class Slab<Descriptor>;
template class Slab<PartialNode>;

Heap::Heap(BackendKind backend, std::size_t shared_region_len)
    : vm_(backend, shared_region_len),
      descs_(kDescriptorCapacity),
      nodes_(kNodeCapacity) {}

void Heap::push_partial(Descriptor* d) {
  std::uint32_t ni = node_free_.pop([this](std::uint32_t i) -> auto& {
    return nodes_[i].next;
  });
  PartialNode* n;
  if (ni != kNilIndex) {
    n = &nodes_[ni];
  } else {
    n = nodes_.create();
    if (n == nullptr) {
      std::fprintf(stderr, "oamalloc: partial-node slab exhausted\n");
      std::abort();
    }
    ni = nodes_.index_of(n);
  }
  n->desc = d;
  partial_list(d->size_class, d->persistent)
      .push(ni, [this](std::uint32_t i) -> auto& { return nodes_[i].next; });
}

bool Heap::take_all_blocks(Descriptor* d, std::uint32_t cls, bool persistent,
                           Anchor& taken) {
  for (;;) {
    std::uint64_t w = d->anchor.load(std::memory_order_acquire);
    Anchor a = Anchor::unpack(w);
    // Stale list entries: the descriptor may have been retired and reused
    // since it was listed. Any reuse bumps the anchor tag, so the CAS below
    // cannot succeed against a snapshot older than the class check.
    if (d->size_class != cls || d->persistent != persistent) return false;
    if (a.state != SbState::Partial || a.count == 0) return false;
    Anchor na;
    na.state = SbState::Full;
    na.avail = 0;
    na.count = 0;
    na.tag = a.tag + 1;
    if (d->anchor.compare_exchange_weak(w, na.pack(),
                                        std::memory_order_acq_rel,
                                        std::memory_order_acquire)) {
      taken = a;
      return true;
    }
  }
}

std::size_t Heap::fill(std::uint32_t cls, bool persistent, void** out,
                       std::size_t want) {
  assert(cls < kNumClasses);
  fill_calls_.fetch_add(1, std::memory_order_relaxed);
  auto node_next = [this](std::uint32_t i) -> auto& { return nodes_[i].next; };
  std::size_t got = 0;
  while (got < want) {
    Descriptor* d = nullptr;
    Anchor taken;
    std::uint32_t ni;
    while ((ni = partial_list(cls, persistent).pop(node_next)) != kNilIndex) {
      Descriptor* cand = nodes_[ni].desc;
      node_free_.push(ni, node_next);
      if (take_all_blocks(cand, cls, persistent, taken)) {
        d = cand;
        break;
      }
    }
    if (d != nullptr) {
      // Walk the in-superblock chain we now own exclusively.
      std::size_t bs = kClassSizes[cls];
      std::uint32_t idx = taken.avail;
      std::uint32_t kept_first = kNilIndex, kept_last = kNilIndex;
      std::uint32_t kept = 0;
      for (std::uint32_t i = 0; i < taken.count; ++i) {
        assert(idx < d->block_count);
        std::uint32_t nxt = block_link(d, idx);
        if (got < want) {
          out[got++] = d->base + static_cast<std::size_t>(idx) * bs;
        } else {
          if (kept_first == kNilIndex) kept_first = idx;
          if (kept_last != kNilIndex) block_link(d, kept_last) = idx;
          kept_last = idx;
          ++kept;
        }
        idx = nxt;
      }
      if (kept > 0) push_chain(d, kept_first, kept_last, kept);
    } else {
      d = new_superblock(cls, persistent);
      if (d == nullptr) break;  // OS out of memory
      std::size_t bs = kClassSizes[cls];
      auto take = static_cast<std::uint32_t>(
          std::min<std::size_t>(want - got, d->block_count));
      for (std::uint32_t i = 0; i < take; ++i)
        out[got++] = d->base + static_cast<std::size_t>(i) * bs;
      if (take < d->block_count)
        push_chain(d, take, d->block_count - 1, d->block_count - take);
    }
  }
  return got;
}

void Heap::push_chain(Descriptor* d, std::uint32_t first, std::uint32_t last,
                      std::uint32_t n) {
  assert(n > 0);
  std::uint64_t w = d->anchor.load(std::memory_order_acquire);
  for (;;) {
    Anchor a = Anchor::unpack(w);
    block_link(d, last) = (a.count == 0) ? kEndOfList : a.avail;
    Anchor na;
    na.avail = first;
    na.count = a.count + n;
    na.tag = a.tag + 1;
    na.state = SbState::Partial;
    assert(na.count < d->block_count &&
           "chain push-back never empties a superblock");
    if (d->anchor.compare_exchange_weak(w, na.pack(),
                                        std::memory_order_acq_rel,
                                        std::memory_order_acquire)) {
      if (a.state == SbState::Full) push_partial(d);
      return;
    }
  }
}

void Heap::flush_one(void* block) {
  Descriptor* d = pagemap_.lookup(block);
  if (d == nullptr || d->size_class == kLargeClass) {
    std::fprintf(stderr, "oamalloc: invalid free of %p\n", block);
    std::abort();
  }
  flush_calls_.fetch_add(1, std::memory_order_relaxed);
  std::size_t bs = kClassSizes[d->size_class];
  auto off = static_cast<std::size_t>(static_cast<std::byte*>(block) - d->base);
  assert(off % bs == 0 && "free of a non-block address");
  auto idx = static_cast<std::uint32_t>(off / bs);
  bool keep_resident = vm_.kind() == BackendKind::KeepResident;

  std::uint64_t w = d->anchor.load(std::memory_order_acquire);
  for (;;) {
    Anchor a = Anchor::unpack(w);
    block_link(d, idx) = (a.count == 0) ? kEndOfList : a.avail;
    Anchor na;
    na.avail = idx;
    na.count = a.count + 1;
    na.tag = a.tag + 1;
    if (na.count == d->block_count && !(d->persistent && keep_resident)) {
      na.state = SbState::Empty;  // persistent+keep never materializes Empty
    } else {
      na.state = SbState::Partial;
    }
    if (d->anchor.compare_exchange_weak(w, na.pack(),
                                        std::memory_order_acq_rel,
                                        std::memory_order_acquire)) {
      if (a.state == SbState::Full) push_partial(d);
      if (na.state == SbState::Empty) retire_superblock(d);
      return;
    }
  }
}

void Heap::retire_superblock(Descriptor* d) {
  assert(d->load_anchor().state == SbState::Empty);
  auto desc_next = [this](std::uint32_t i) -> auto& {
    return descs_[i].pool_next;
  };
  d->active.store(false, std::memory_order_release);
  if (!d->persistent) {
    pagemap_.unregister_range(d->base, d->length);
    vm_.release(d->base, d->length);
    d->base = nullptr;
    generic_pool_.push(d->id, desc_next);
  } else {
    assert(vm_.kind() != BackendKind::KeepResident);
    // Frames go away; the range (and its pagemap entry) stays readable.
    vm_.neutralize_superblock(d->base);
    persistent_pool_.push(d->id, desc_next);
  }
}

Descriptor* Heap::new_superblock(std::uint32_t cls, bool persistent) {
  auto desc_next = [this](std::uint32_t i) -> auto& {
    return descs_[i].pool_next;
  };
  Descriptor* d = nullptr;
  bool have_range = false;
  if (persistent) {
    // Priority (i): a pooled persistent descriptor already owns a
    // neutralized virtual range; rearm it instead of consuming new
    // address space.
    std::uint32_t di = persistent_pool_.pop(desc_next);
    if (di != kNilIndex) {
      d = &descs_[di];
      vm_.rearm_superblock(d->base);
      have_range = true;
    }
  }
  if (d == nullptr) {
    std::uint32_t di = generic_pool_.pop(desc_next);
    if (di != kNilIndex) d = &descs_[di];
  }
  if (d == nullptr) {
    d = descs_.create();
    if (d == nullptr) return nullptr;
    d->id = descs_.index_of(d);
  }
  if (!have_range) {
    void* base = vm_.reserve_superblock();
    if (base == nullptr) {
      generic_pool_.push(d->id, desc_next);
      return nullptr;
    }
    d->base = static_cast<std::byte*>(base);
  }
  std::uint64_t old_tag = d->load_anchor(std::memory_order_relaxed).tag;
  d->size_class = cls;
  d->block_count = blocks_per_superblock(cls);
  d->length = kSuperblockSize;
  d->persistent = persistent;
  // Thread the free list through all blocks (writes happen after rearm).
  for (std::uint32_t i = 0; i + 1 < d->block_count; ++i)
    block_link(d, i) = i + 1;
  block_link(d, d->block_count - 1) = kEndOfList;
  d->active.store(true, std::memory_order_release);
  Anchor a;
  a.state = SbState::Full;  // all blocks go straight to the caller
  a.avail = 0;
  a.count = 0;
  a.tag = old_tag + 1;
  d->anchor.store(a.pack(), std::memory_order_release);
  if (!have_range) pagemap_.register_range(d->base, d->length, d);
  return d;
}

void* Heap::alloc_large(std::size_t size) {
  void* base = vm_.reserve_aligned(size);
  if (base == nullptr) return nullptr;
  auto desc_next = [this](std::uint32_t i) -> auto& {
    return descs_[i].pool_next;
  };
  Descriptor* d = nullptr;
  std::uint32_t di = generic_pool_.pop(desc_next);
  if (di != kNilIndex) {
    d = &descs_[di];
  } else {
    d = descs_.create();
    if (d == nullptr) {
      vm_.release(base, size);
      return nullptr;
    }
    d->id = descs_.index_of(d);
  }
  std::uint64_t old_tag = d->load_anchor(std::memory_order_relaxed).tag;
  d->base = static_cast<std::byte*>(base);
  d->length = VmBackend::aligned_length(size);
  d->size_class = kLargeClass;
  d->block_count = 1;
  d->persistent = false;
  d->active.store(true, std::memory_order_release);
  Anchor a;
  a.state = SbState::Full;
  a.tag = old_tag + 1;
  d->anchor.store(a.pack(), std::memory_order_release);
  pagemap_.register_range(d->base, d->length, d);
  return base;
}

void Heap::free_large(Descriptor* d) {
  assert(d->size_class == kLargeClass);
  pagemap_.unregister_range(d->base, d->length);
  vm_.release(d->base, d->length);
  d->base = nullptr;
  d->active.store(false, std::memory_order_release);
  std::uint64_t old_tag = d->load_anchor(std::memory_order_relaxed).tag;
  Anchor a;
  a.state = SbState::Empty;
  a.tag = old_tag + 1;
  d->anchor.store(a.pack(), std::memory_order_release);
  generic_pool_.push(d->id, [this](std::uint32_t i) -> auto& {
    return descs_[i].pool_next;
  });
}

}  // namespace oam
