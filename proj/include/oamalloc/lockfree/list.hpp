#pragma once

#include <atomic>
#include <cstdint>

#include "oamalloc/oa_reclaim.hpp"

namespace oam::lockfree {

// List/map cell. Allocated with palloc so optimistic reads of freed nodes
// never fault; freed only through the reclamation domain.
struct Node {
  std::int64_t key;
  std::int64_t value;
  std::atomic<std::uintptr_t> next;  // low bit marks logical deletion
};

inline bool is_marked(std::uintptr_t w) { return (w & 1) != 0; }
inline std::uintptr_t strip_mark(std::uintptr_t w) { return w & ~std::uintptr_t{1}; }
inline Node* node_of(std::uintptr_t w) {
  return reinterpret_cast<Node*>(strip_mark(w));
}
inline std::uintptr_t word_of(const Node* n) {
  return reinterpret_cast<std::uintptr_t>(n);
}

// Harris-Michael sorted list under optimistic access: traversal reads are
// unprotected but checked against the warning mechanism per node hop; every
// CAS is preceded by hazard publication and a single validity check.
class List {
 public:
  explicit List(reclaim::Domain& domain);
  // Nodes (including the head sentinel) are left to the reclamation scheme;
  // the list itself owns no memory that needs tearing down.
  ~List() = default;
  List(const List&) = delete;
  List& operator=(const List&) = delete;

  bool search(std::int64_t key);
  bool insert(std::int64_t key, std::int64_t value);
  bool remove(std::int64_t key);

  // Quiescent-only iteration (tests, size checks).
  template <typename F>
  void for_each(F&& fn) const {
    for (std::uintptr_t w = head_->next.load(std::memory_order_acquire);
         node_of(w) != nullptr;
         w = node_of(w)->next.load(std::memory_order_acquire)) {
      Node* n = node_of(w);
      if (!is_marked(n->next.load(std::memory_order_acquire)))
        fn(n->key, n->value);
    }
  }

  std::size_t size() const {  // quiescent only
    std::size_t n = 0;
    for_each([&](std::int64_t, std::int64_t) { ++n; });
    return n;
  }

  reclaim::Domain& domain() { return domain_; }

 private:
  struct Position {
    Node* prev;
    Node* curr;          // first node with key >= target, or nullptr
    std::uintptr_t next;  // curr->next at validation time (unmarked)
  };

  // Hazards 0..2 hold prev/curr/next and are validated when this returns.
  bool find(reclaim::Handle& h, std::int64_t key, Position& pos);

  reclaim::Domain& domain_;
  Node* head_;  // permanent sentinel: the restart target
};

}  // namespace oam::lockfree
