#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <map>
#include <thread>
#include <vector>

#include "oamalloc/heap.hpp"
#include "oamalloc/pagemap.hpp"

using namespace oam;

namespace {

// Fake superblock-aligned addresses; the pagemap never dereferences them.
void* sb_addr(std::size_t slot) {
  return reinterpret_cast<void*>(slot * kSuperblockSize);
}

}  // namespace

TEST_CASE("register then lookup, including mid-superblock addresses") {
  PageMap pm;
  Descriptor d;
  d.size_class = 3;
  void* base = sb_addr(100);
  pm.register_range(base, kSuperblockSize, &d);
  CHECK(pm.lookup(base) == &d);
  CHECK(pm.lookup(static_cast<std::byte*>(base) + 5000) == &d);
  CHECK(pm.lookup(static_cast<std::byte*>(base) + kSuperblockSize - 1) == &d);
  auto info = pm.find(base);
  REQUIRE(info.has_value());
  CHECK(info->descriptor == &d);
  CHECK(info->size_class == 3);
}

TEST_CASE("adjacent superblocks resolve to distinct descriptors") {
  PageMap pm;
  Descriptor a, b;
  pm.register_range(sb_addr(200), kSuperblockSize, &a);
  pm.register_range(sb_addr(201), kSuperblockSize, &b);

  // Shadow-map oracle over the boundary region.
  std::map<std::uintptr_t, Descriptor*> shadow;
  shadow[200 * kSuperblockSize] = &a;
  shadow[201 * kSuperblockSize] = &b;
  for (std::ptrdiff_t off = -64; off <= 64; off += 8) {
    auto addr = 201 * kSuperblockSize + off;
    auto it = shadow.upper_bound(static_cast<std::uintptr_t>(addr));
    --it;
    CHECK(pm.lookup(reinterpret_cast<void*>(addr)) == it->second);
  }
}

TEST_CASE("unregister") {
  PageMap pm;
  Descriptor d;
  pm.register_range(sb_addr(300), kSuperblockSize, &d);
  pm.unregister_range(sb_addr(300), kSuperblockSize);
  CHECK(pm.lookup(sb_addr(300)) == nullptr);
  CHECK(!pm.find(sb_addr(300)).has_value());
}

TEST_CASE("lookup of never-registered address") {
  PageMap pm;
  CHECK(pm.lookup(sb_addr(12345)) == nullptr);
  CHECK(pm.lookup(reinterpret_cast<void*>(0x10)) == nullptr);
}

TEST_CASE("multi-superblock range (large allocation)") {
  PageMap pm;
  Descriptor d;
  d.size_class = kLargeClass;
  pm.register_range(sb_addr(400), 3 * kSuperblockSize, &d);
  CHECK(pm.lookup(sb_addr(400)) == &d);
  CHECK(pm.lookup(sb_addr(402)) == &d);
  CHECK(pm.lookup(sb_addr(403)) == nullptr);
  pm.unregister_range(sb_addr(400), 3 * kSuperblockSize);
  CHECK(pm.lookup(sb_addr(401)) == nullptr);
}

TEST_CASE("concurrent registration vs lookup never yields a torn entry") {
  PageMap pm;
  constexpr int kWriters = 4;
  constexpr std::size_t kPerWriter = 256;
  std::vector<Descriptor> descs(kWriters * kPerWriter);
  std::atomic<bool> stop{false};

  std::vector<std::thread> threads;
  for (int w = 0; w < kWriters; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t i = 0; i < kPerWriter; ++i) {
        std::size_t slot = 1000 + w * kPerWriter + i;
        pm.register_range(sb_addr(slot), kSuperblockSize,
                          &descs[w * kPerWriter + i]);
      }
    });
  }
  std::thread reader([&] {
    while (!stop.load()) {
      for (std::size_t slot = 1000; slot < 1000 + kWriters * kPerWriter;
           ++slot) {
        Descriptor* d = pm.lookup(sb_addr(slot));
        // Either not yet published or exactly the registered descriptor.
        if (d != nullptr) {
          std::size_t idx = slot - 1000;
          CHECK(d == &descs[idx]);
        }
      }
    }
  });
  for (auto& t : threads) t.join();
  stop.store(true);
  reader.join();

  for (std::size_t slot = 1000; slot < 1000 + kWriters * kPerWriter; ++slot)
    CHECK(pm.lookup(sb_addr(slot)) == &descs[slot - 1000]);
}
