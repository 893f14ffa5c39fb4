#include "oamalloc/vm_backend.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <unistd.h>

#include <cassert>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace oam {

namespace {

[[noreturn]] void fatal(const char* what) {
  std::fprintf(stderr, "oamalloc: %s failed: %s\n", what, std::strerror(errno));
  std::abort();
}

}  // namespace

const char* backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::KeepResident: return "keep";
    case BackendKind::AdviseRelease: return "advise";
    case BackendKind::SharedRemap: return "shared";
  }
  return "?";
}

VmBackend::VmBackend(BackendKind kind, std::size_t shared_region_len)
    : kind_(kind), shared_len_(shared_region_len) {
  assert(shared_len_ >= 4096 && shared_len_ <= kSuperblockSize);
  assert(kSuperblockSize % shared_len_ == 0);
}

VmBackend::~VmBackend() {
  // The shared region and fd stay alive: neutralized superblocks map it and
  // must remain readable for the process lifetime.
}

std::size_t VmBackend::aligned_length(std::size_t length) {
  return (length + kSuperblockSize - 1) & ~(kSuperblockSize - 1);
}

void* VmBackend::reserve_aligned(std::size_t length) {
  length = aligned_length(length);
  // Over-map, then trim to alignment.
  std::size_t over = length + kSuperblockSize;
  void* raw = ::mmap(nullptr, over, PROT_READ | PROT_WRITE,
                     MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (raw == MAP_FAILED) return nullptr;
  auto addr = reinterpret_cast<std::uintptr_t>(raw);
  std::uintptr_t base = (addr + kSuperblockSize - 1) & ~(kSuperblockSize - 1);
  if (base > addr) ::munmap(raw, base - addr);
  std::uintptr_t end = base + length;
  if (addr + over > end) ::munmap(reinterpret_cast<void*>(end), addr + over - end);
  return reinterpret_cast<void*>(base);
}

void VmBackend::release(void* base, std::size_t length) {
  if (::munmap(base, aligned_length(length)) != 0) fatal("munmap");
}

void VmBackend::ensure_shared_region() {
  std::call_once(shared_once_, [this] {
    int fd = static_cast<int>(::memfd_create("oamalloc-shared", 0));
    if (fd < 0) fatal("memfd_create");
    if (::ftruncate(fd, static_cast<off_t>(shared_len_)) != 0)
      fatal("ftruncate");
    void* win = ::mmap(nullptr, shared_len_, PROT_READ | PROT_WRITE,
                       MAP_SHARED, fd, 0);
    if (win == MAP_FAILED) fatal("mmap shared window");
    shared_window_ = static_cast<std::byte*>(win);
    shared_fd_ = fd;
  });
}

std::byte* VmBackend::shared_window() {
  ensure_shared_region();
  return shared_window_;
}

void VmBackend::neutralize_superblock(void* base) {
  switch (kind_) {
    case BackendKind::KeepResident:
      break;
    case BackendKind::AdviseRelease:
      if (::madvise(base, kSuperblockSize, MADV_DONTNEED) != 0)
        fatal("madvise(MADV_DONTNEED)");
      break;
    case BackendKind::SharedRemap: {
      ensure_shared_region();
      auto* p = static_cast<std::byte*>(base);
      for (std::size_t off = 0; off < kSuperblockSize; off += shared_len_) {
        void* r = ::mmap(p + off, shared_len_, PROT_READ | PROT_WRITE,
                         MAP_SHARED | MAP_FIXED, shared_fd_, 0);
        if (r == MAP_FAILED) fatal("mmap(MAP_SHARED|MAP_FIXED)");
      }
      break;
    }
  }
}

void VmBackend::rearm_superblock(void* base) {
  if (kind_ != BackendKind::SharedRemap) return;  // advise/keep: nothing to do
  void* r = ::mmap(base, kSuperblockSize, PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS | MAP_FIXED, -1, 0);
  if (r == MAP_FAILED) fatal("mmap(MAP_PRIVATE|MAP_FIXED)");
}

long VmBackend::resident_bytes() {
  FILE* f = std::fopen("/proc/self/statm", "r");
  if (f == nullptr) return -1;
  long total = 0, resident = 0;
  int n = std::fscanf(f, "%ld %ld", &total, &resident);
  std::fclose(f);
  if (n != 2) return -1;
  return resident * static_cast<long>(::sysconf(_SC_PAGESIZE));
}

}  // namespace oam
