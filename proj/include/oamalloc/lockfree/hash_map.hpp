#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "oamalloc/lockfree/list.hpp"

namespace oam::lockfree {

// Fixed-size lock-free hash map: an array of independent sorted lists. No
// resizing; the bucket count is derived from the expected size at the target
// load factor.
class HashMap {
 public:
  HashMap(reclaim::Domain& domain, std::size_t expected_size,
          double load_factor = 0.75)
      : domain_(domain) {
    auto buckets = static_cast<std::size_t>(
        std::ceil(static_cast<double>(expected_size) / load_factor));
    if (buckets == 0) buckets = 1;
    buckets_.reserve(buckets);
    for (std::size_t i = 0; i < buckets; ++i)
      buckets_.push_back(std::make_unique<List>(domain));
  }

  bool search(std::int64_t key) { return bucket_for(key).search(key); }
  bool insert(std::int64_t key, std::int64_t value) {
    return bucket_for(key).insert(key, value);
  }
  bool remove(std::int64_t key) { return bucket_for(key).remove(key); }

  std::size_t bucket_count() const { return buckets_.size(); }
  List& bucket(std::size_t i) { return *buckets_[i]; }

  std::size_t size() const {  // quiescent only
    std::size_t n = 0;
    for (const auto& b : buckets_) n += b->size();
    return n;
  }

  template <typename F>
  void for_each(F&& fn) const {  // quiescent only
    for (const auto& b : buckets_) b->for_each(fn);
  }

  reclaim::Domain& domain() { return domain_; }

 private:
  List& bucket_for(std::int64_t key) {
    // Fibonacci multiplicative hash of the integer key.
    auto x = static_cast<std::uint64_t>(key) * 0x9e3779b97f4a7c15ull;
    return *buckets_[(x >> 17) % buckets_.size()];
  }

  reclaim::Domain& domain_;
  std::vector<std::unique_ptr<List>> buckets_;
};

}  // namespace oam::lockfree
