#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "oamalloc/size_classes.hpp"

namespace oam {

struct Descriptor;

struct PageInfo {
  Descriptor* descriptor;
  std::uint32_t size_class;
};

// Lock-free address -> descriptor map. Superblocks are kSuperblockSize-aligned
// and large allocations are given aligned whole-slot reservations, so one
// entry per superblock-sized slot is enough. Two-level radix: leaves are
// published with a CAS and never freed.
class PageMap {
 public:
  PageMap();
  ~PageMap();
  PageMap(const PageMap&) = delete;
  PageMap& operator=(const PageMap&) = delete;

  // base must be kSuperblockSize-aligned; length is rounded up to whole slots.
  void register_range(void* base, std::size_t length, Descriptor* desc);
  void unregister_range(void* base, std::size_t length);

  // Wait-free. nullptr when addr is not inside a registered range.
  Descriptor* lookup(const void* addr) const noexcept;

  std::optional<PageInfo> find(const void* addr) const noexcept;

 private:
  static constexpr unsigned kSlotShift = 21;  // log2(kSuperblockSize)
  static constexpr unsigned kLeafBits = 14;
  static constexpr unsigned kRootBits = 13;   // covers 48-bit address space
  static constexpr std::size_t kLeafEntries = std::size_t{1} << kLeafBits;
  static constexpr std::size_t kRootEntries = std::size_t{1} << kRootBits;

  using Leaf = std::atomic<Descriptor*>;

  Leaf* leaf_for(std::size_t slot, bool create);

  std::atomic<Leaf*>* root_;
};

}  // namespace oam
