#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>

#include "oamalloc/size_classes.hpp"

namespace oam {

enum class BackendKind {
  KeepResident,   // never release physical memory of persistent superblocks
  AdviseRelease,  // madvise(MADV_DONTNEED): pages revert to the zero frame
  SharedRemap,    // remap onto one shared region; frames collapse to it
};

const char* backend_name(BackendKind kind);

// All OS virtual-memory interaction. Superblocks are reserved
// kSuperblockSize-aligned; the two releasing backends drop the physical
// frames of a persistent superblock while keeping its address range readable.
class VmBackend {
 public:
  explicit VmBackend(BackendKind kind,
                     std::size_t shared_region_len = kSuperblockSize);
  ~VmBackend();
  VmBackend(const VmBackend&) = delete;
  VmBackend& operator=(const VmBackend&) = delete;

  BackendKind kind() const noexcept { return kind_; }

  // Aligned, zero-filled, readable+writable. nullptr on OS out-of-memory.
  void* reserve_superblock() { return reserve_aligned(kSuperblockSize); }

  // length is rounded up to a multiple of kSuperblockSize so the reservation
  // owns every pagemap slot it touches. Returns the rounded mapping.
  void* reserve_aligned(std::size_t length);
  static std::size_t aligned_length(std::size_t length);

  void release(void* base, std::size_t length);

  // Persistent superblock with zero live blocks: drop frames, keep reads
  // valid. No-op under KeepResident.
  void neutralize_superblock(void* base);

  // Make a previously neutralized range private, writable memory again.
  // One mmap for SharedRemap; no-op otherwise.
  void rearm_superblock(void* base);

  // The shared region's own mapping (SharedRemap only, created lazily).
  // Writes here are visible through every neutralized superblock.
  std::byte* shared_window();
  std::size_t shared_region_length() const noexcept { return shared_len_; }

  // Current RSS in bytes from /proc/self/statm; -1 if unavailable.
  static long resident_bytes();

 private:
  void ensure_shared_region();

  BackendKind kind_;
  std::size_t shared_len_;
  std::once_flag shared_once_;
  int shared_fd_ = -1;
  std::byte* shared_window_ = nullptr;
};

}  // namespace oam
