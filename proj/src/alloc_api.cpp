#include "oamalloc/alloc_api.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace oam {

namespace {

// One cache per (thread, allocator). Destroyed (and drained) at thread exit;
// an Allocator must outlive every thread that used it.
struct CacheRegistry {
  std::unordered_map<const Allocator*, std::unique_ptr<ThreadCache>> caches;
};

thread_local CacheRegistry tl_registry;

}  // namespace

Allocator::Allocator(AllocatorConfig cfg)
    : cfg_(cfg), heap_(cfg.backend, cfg.shared_region_len) {}

Allocator::~Allocator() { tl_registry.caches.erase(this); }

ThreadCache& Allocator::local_cache() {
  auto& slot = tl_registry.caches[this];
  if (!slot) slot = std::make_unique<ThreadCache>(&heap_, cfg_.cache_capacity);
  return *slot;
}

void Allocator::drain_thread_cache() {
  auto it = tl_registry.caches.find(this);
  if (it != tl_registry.caches.end()) it->second->drain();
}

void* Allocator::malloc_(std::size_t size) {
  if (size == 0) return nullptr;
  std::uint32_t cls = class_for_size(size);
  if (cls == kLargeClass) return heap_.alloc_large(size);
  return local_cache().alloc(cls, false);
}

void* Allocator::palloc(std::size_t size) {
  if (size == 0 || size > kMaxClassSize) return nullptr;  // size-class only
  return local_cache().alloc(class_for_size(size), true);
}

void Allocator::free_(void* addr) {
  if (addr == nullptr) return;
  Descriptor* d = heap_.descriptor_for(addr);
  if (d == nullptr) {
    std::fprintf(stderr, "oamalloc: invalid free of %p\n", addr);
    std::abort();
  }
  if (d->size_class == kLargeClass) {
    heap_.free_large(d);
    return;
  }
  local_cache().free(addr);
}

namespace {

std::mutex g_init_mu;
std::atomic<Allocator*> g_allocator{nullptr};

BackendKind backend_from_env() {
  const char* v = std::getenv("OAMALLOC_BACKEND");
  if (v == nullptr || std::strcmp(v, "keep") == 0)
    return BackendKind::KeepResident;
  if (std::strcmp(v, "advise") == 0) return BackendKind::AdviseRelease;
  if (std::strcmp(v, "shared") == 0) return BackendKind::SharedRemap;
  std::fprintf(stderr, "oamalloc: unknown OAMALLOC_BACKEND '%s'\n", v);
  std::abort();
}

}  // namespace

Allocator& global_allocator() {
  Allocator* a = g_allocator.load(std::memory_order_acquire);
  if (a != nullptr) return *a;
  std::lock_guard<std::mutex> lk(g_init_mu);
  a = g_allocator.load(std::memory_order_relaxed);
  if (a == nullptr) {
    AllocatorConfig cfg;
    cfg.backend = backend_from_env();
    a = new Allocator(cfg);  // lives for the process lifetime
    g_allocator.store(a, std::memory_order_release);
  }
  return *a;
}

void init_global_allocator(AllocatorConfig cfg) {
  std::lock_guard<std::mutex> lk(g_init_mu);
  if (g_allocator.load(std::memory_order_relaxed) != nullptr) {
    std::fprintf(stderr, "oamalloc: init_global_allocator after first use\n");
    std::abort();
  }
  g_allocator.store(new Allocator(cfg), std::memory_order_release);
}

void* malloc_(std::size_t size) { return global_allocator().malloc_(size); }
void free_(void* addr) { global_allocator().free_(addr); }
void* palloc(std::size_t size) { return global_allocator().palloc(size); }

}  // namespace oam
