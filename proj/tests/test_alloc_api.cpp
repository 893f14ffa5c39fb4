#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "oamalloc/alloc_api.hpp"

using namespace oam;

TEST_CASE("size routing matches the class table") {
  Allocator a;
  for (std::size_t sz : {1ul, 15ul, 16ul, 17ul, 100ul, 4096ul, 16384ul}) {
    void* p = a.malloc_(sz);
    REQUIRE(p != nullptr);
    Descriptor* d = a.heap().descriptor_for(p);
    REQUIRE(d != nullptr);
    CHECK(d->size_class == class_for_size(sz));
    CHECK(block_size(d->size_class) >= sz);
    std::memset(p, 0xEE, sz);  // usable end to end
    a.free_(p);
  }
}

TEST_CASE("zero-size requests yield nullptr") {
  Allocator a;
  CHECK(a.malloc_(0) == nullptr);
  CHECK(a.palloc(0) == nullptr);
  a.free_(nullptr);  // no-op
}

TEST_CASE("large requests bypass the class system") {
  Allocator a;
  void* p = a.malloc_(16385);
  REQUIRE(p != nullptr);
  Descriptor* d = a.heap().descriptor_for(p);
  REQUIRE(d != nullptr);
  CHECK(d->size_class == kLargeClass);
  std::memset(p, 1, 16385);
  a.free_(p);
  CHECK(a.heap().descriptor_for(p) == nullptr);

  void* q = a.malloc_(10 * kSuperblockSize);
  REQUIRE(q != nullptr);
  std::memset(q, 2, 10 * kSuperblockSize);
  a.free_(q);
}

TEST_CASE("palloc rejects sizes above the largest class") {
  Allocator a;
  CHECK(a.palloc(16385) == nullptr);
  void* p = a.palloc(16384);
  REQUIRE(p != nullptr);
  CHECK(a.heap().descriptor_for(p)->persistent);
  a.free_(p);
}

TEST_CASE("palloc blocks stay readable after free under every backend") {
  for (BackendKind k : {BackendKind::KeepResident, BackendKind::AdviseRelease,
                        BackendKind::SharedRemap}) {
    CAPTURE(backend_name(k));
    Allocator a({.backend = k});
    std::vector<void*> ps;
    for (int i = 0; i < 5000; ++i) {
      void* p = a.palloc(64);
      REQUIRE(p != nullptr);
      std::memset(p, 0x5A, 64);
      ps.push_back(p);
    }
    for (void* p : ps) a.free_(p);
    a.drain_thread_cache();
    // Every address still reads without faulting.
    unsigned long sum = 0;
    for (void* p : ps)
      for (int off = 0; off < 64; ++off)
        sum += static_cast<unsigned char*>(p)[off];
    CHECK(sum < 5000ul * 64 * 256);  // value is immaterial; reads succeeded
  }
}

TEST_CASE("regular and persistent blocks never share a superblock") {
  Allocator a;
  std::set<Descriptor*> reg, per;
  std::vector<void*> all;
  for (int i = 0; i < 500; ++i) {
    void* p = a.malloc_(100);
    void* q = a.palloc(100);
    reg.insert(a.heap().descriptor_for(p));
    per.insert(a.heap().descriptor_for(q));
    all.push_back(p);
    all.push_back(q);
  }
  for (Descriptor* d : reg) CHECK(!d->persistent);
  for (Descriptor* d : per) CHECK(d->persistent);
  for (void* p : all) a.free_(p);
}

TEST_CASE("malloc/free round-trip conserves blocks") {
  Allocator a;
  std::vector<void*> live;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 20000; ++i) {
    if (live.empty() || rng() % 2 == 0) {
      live.push_back(a.malloc_(1 + rng() % 2000));
      REQUIRE(live.back() != nullptr);
    } else {
      std::size_t j = rng() % live.size();
      a.free_(live[j]);
      live[j] = live.back();
      live.pop_back();
    }
  }
  for (void* p : live) a.free_(p);
  a.drain_thread_cache();
  Heap& h = a.heap();
  for (std::size_t i = 0; i < h.descriptor_count(); ++i) {
    Descriptor& d = h.descriptor_at(i);
    if (d.active.load() && d.size_class != kLargeClass)
      CHECK(d.load_anchor().count == d.block_count);
  }
}

TEST_CASE("cross-thread free through the facade") {
  Allocator a;
  std::vector<void*> ps;
  std::thread producer([&] {
    for (int i = 0; i < 200; ++i) ps.push_back(a.malloc_(100));
    a.drain_thread_cache();
  });
  producer.join();
  for (void* p : ps) {
    std::memset(p, 3, 100);
    a.free_(p);  // main thread frees blocks it never allocated
  }
  a.drain_thread_cache();
}

TEST_CASE("global facade") {
  init_global_allocator({.backend = BackendKind::KeepResident});
  void* p = oam::malloc_(100);
  REQUIRE(p != nullptr);
  void* q = oam::palloc(100);
  REQUIRE(q != nullptr);
  CHECK(global_allocator().heap().descriptor_for(q)->persistent);
  oam::free_(p);
  oam::free_(q);
  // q remains readable after free.
  volatile unsigned char c = static_cast<unsigned char*>(q)[8];
  (void)c;
}
