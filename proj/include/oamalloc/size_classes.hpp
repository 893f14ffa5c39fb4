#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>

namespace oam {

inline constexpr std::size_t kSuperblockSize = std::size_t{1} << 21;  // 2MiB
inline constexpr std::size_t kMaxClassSize = 16384;
inline constexpr std::size_t kMinClassSize = 16;

// Block sizes are multiples of 16 so that every block in a superblock is at
// least 16-byte aligned (blocks live at base + i * size, base is 2MiB-aligned).
// Spacing is ~1.25x from 64 bytes upward.
inline constexpr std::size_t kClassSizes[] = {
    16,   32,   48,   64,   80,   96,    112,   128,   160,
    192,  224,  256,  320,  384,  448,   512,   640,   768,
    896,  1024, 1280, 1536, 1792, 2048,  2560,  3072,  3584,
    4096, 5120, 6144, 7168, 8192, 10240, 12288, 14336, 16384};

inline constexpr std::uint32_t kNumClasses =
    sizeof(kClassSizes) / sizeof(kClassSizes[0]);

// Sentinel class index used to route large (non-size-class) allocations
// through the pagemap.
inline constexpr std::uint32_t kLargeClass = 0xffffffffu;

// Worst-case block_size/request for requests >= 16 bytes. The table cannot do
// better than 2x right above 16 bytes while keeping 16-byte alignment; from
// 64 bytes on the bound tightens to 1.25x.
inline constexpr double kWasteFactorSmall = 2.0;   // 16 <= r < 64
inline constexpr double kWasteFactorLarge = 1.25;  // r >= 64

// Smallest class whose block size is >= request, or kLargeClass when the
// request exceeds kMaxClassSize. Requests of 0 bytes are a caller error.
std::uint32_t class_for_size(std::size_t request);

inline std::size_t block_size(std::uint32_t cls) {
  assert(cls < kNumClasses);
  return kClassSizes[cls];
}

inline std::uint32_t blocks_per_superblock(std::uint32_t cls) {
  assert(cls < kNumClasses);
  return static_cast<std::uint32_t>(kSuperblockSize / kClassSizes[cls]);
}

// Guaranteed alignment of blocks of a class: the largest power of two
// dividing the block size (>= 16 by table construction).
inline std::size_t block_alignment(std::uint32_t cls) {
  std::size_t s = block_size(cls);
  return s & (~s + 1);
}

}  // namespace oam
