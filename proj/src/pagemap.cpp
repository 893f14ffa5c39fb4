#include "oamalloc/pagemap.hpp"

#include <sys/mman.h>

#include <cassert>
#include <cstdio>
#include <cstdlib>

#include "oamalloc/heap.hpp"

namespace oam {

namespace {

void* zeroed_pages(std::size_t bytes) {
  void* p = ::mmap(nullptr, bytes, PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (p == MAP_FAILED) {
    std::fprintf(stderr, "oamalloc: pagemap mmap failed\n");
    std::abort();
  }
  return p;
}

}  // namespace

PageMap::PageMap() {
  root_ = static_cast<std::atomic<Leaf*>*>(
      zeroed_pages(kRootEntries * sizeof(std::atomic<Leaf*>)));
}

PageMap::~PageMap() {
  // Leaves are intentionally leaked: registered persistent superblocks must
  // remain resolvable for the process lifetime.
}

PageMap::Leaf* PageMap::leaf_for(std::size_t slot, bool create) {
  std::size_t ri = slot >> kLeafBits;
  assert(ri < kRootEntries && "address outside supported address space");
  Leaf* leaf = root_[ri].load(std::memory_order_acquire);
  if (leaf == nullptr) {
    if (!create) return nullptr;
    Leaf* fresh = static_cast<Leaf*>(zeroed_pages(kLeafEntries * sizeof(Leaf)));
    if (root_[ri].compare_exchange_strong(leaf, fresh,
                                          std::memory_order_acq_rel,
                                          std::memory_order_acquire)) {
      leaf = fresh;
    } else {
      ::munmap(fresh, kLeafEntries * sizeof(Leaf));  // lost the race
    }
  }
  return leaf;
}

void PageMap::register_range(void* base, std::size_t length, Descriptor* desc) {
  auto addr = reinterpret_cast<std::uintptr_t>(base);
  assert(addr % kSuperblockSize == 0);
  assert(length > 0);
  std::size_t first = addr >> kSlotShift;
  std::size_t slots = (length + kSuperblockSize - 1) / kSuperblockSize;
  for (std::size_t s = first; s < first + slots; ++s) {
    Leaf* leaf = leaf_for(s, true);
    assert(leaf[s & (kLeafEntries - 1)].load(std::memory_order_relaxed) ==
               nullptr &&
           "overlapping pagemap registration");
    leaf[s & (kLeafEntries - 1)].store(desc, std::memory_order_release);
  }
}

void PageMap::unregister_range(void* base, std::size_t length) {
  auto addr = reinterpret_cast<std::uintptr_t>(base);
  assert(addr % kSuperblockSize == 0);
  std::size_t first = addr >> kSlotShift;
  std::size_t slots = (length + kSuperblockSize - 1) / kSuperblockSize;
  for (std::size_t s = first; s < first + slots; ++s) {
    Leaf* leaf = leaf_for(s, false);
    assert(leaf != nullptr && "unregister of a never-registered range");
    if (leaf == nullptr) continue;
    assert(leaf[s & (kLeafEntries - 1)].load(std::memory_order_relaxed) !=
               nullptr &&
           "double unregister");
    leaf[s & (kLeafEntries - 1)].store(nullptr, std::memory_order_release);
  }
}

Descriptor* PageMap::lookup(const void* addr) const noexcept {
  std::size_t slot = reinterpret_cast<std::uintptr_t>(addr) >> kSlotShift;
  std::size_t ri = slot >> kLeafBits;
  if (ri >= kRootEntries) return nullptr;
  Leaf* leaf = root_[ri].load(std::memory_order_acquire);
  if (leaf == nullptr) return nullptr;
  return leaf[slot & (kLeafEntries - 1)].load(std::memory_order_acquire);
}

std::optional<PageInfo> PageMap::find(const void* addr) const noexcept {
  Descriptor* d = lookup(addr);
  if (d == nullptr) return std::nullopt;
  return PageInfo{d, d->size_class};
}

}  // namespace oam
