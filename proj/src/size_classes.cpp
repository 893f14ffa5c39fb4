#include "oamalloc/size_classes.hpp"

#include <array>

namespace oam {

namespace {

// 16-byte-granule lookup table: granule g covers requests in
// ((g-1)*16, g*16], so class_for_size is a single indexed load.
constexpr std::size_t kGranules = kMaxClassSize / 16;

constexpr std::array<std::uint8_t, kGranules + 1> build_granule_table() {
  std::array<std::uint8_t, kGranules + 1> t{};
  std::uint32_t cls = 0;
  for (std::size_t g = 1; g <= kGranules; ++g) {
    while (kClassSizes[cls] < g * 16) ++cls;
    t[g] = static_cast<std::uint8_t>(cls);
  }
  return t;
}

constexpr auto kGranuleTable = build_granule_table();

}  // namespace

std::uint32_t class_for_size(std::size_t request) {
  assert(request >= 1 && "zero-byte requests are rejected");
  if (request > kMaxClassSize) return kLargeClass;
  return kGranuleTable[(request + 15) / 16];
}

}  // namespace oam
