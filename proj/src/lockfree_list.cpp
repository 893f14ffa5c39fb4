#include "oamalloc/lockfree/list.hpp"

#include <cstdio>
#include <cstdlib>
#include <limits>
#include <new>

#include "oamalloc/alloc_api.hpp"

namespace oam::lockfree {

namespace {

Node* alloc_node(std::int64_t key, std::int64_t value, std::uintptr_t next) {
  void* raw = oam::palloc(sizeof(Node));
  if (raw == nullptr) {
    std::fprintf(stderr, "oamalloc: node allocation failed\n");
    std::abort();
  }
  Node* n = new (raw) Node();
  n->key = key;
  n->value = value;
  n->next.store(next, std::memory_order_relaxed);
  return n;
}

}  // namespace

List::List(reclaim::Domain& domain) : domain_(domain) {
  head_ = alloc_node(std::numeric_limits<std::int64_t>::min(), 0, 0);
}

bool List::find(reclaim::Handle& h, std::int64_t key, Position& pos) {
  for (;;) {
  restart:
    Node* prev = head_;  // known-valid root
    std::uintptr_t currw = prev->next.load(std::memory_order_acquire);
    if (h.check_warning()) continue;
    for (;;) {
      Node* curr = node_of(currw);
      if (curr == nullptr) {
        h.set_hazard(0, prev);
        h.set_hazard(1, nullptr);
        h.set_hazard(2, nullptr);
        if (!h.validate()) goto restart;
        pos = {prev, nullptr, 0};
        return false;
      }
      // Optimistic reads; both are discarded if a warning fired since the
      // previous check.
      std::uintptr_t nextw = curr->next.load(std::memory_order_acquire);
      std::int64_t ck = curr->key;
      if (h.check_warning()) goto restart;
      if (is_marked(nextw)) {
        // Help unlink the marked node. The CAS writes to prev, so prev and
        // the nodes being relinked get hazards first.
        h.set_hazard(0, prev);
        h.set_hazard(1, curr);
        h.set_hazard(2, node_of(nextw));
        if (!h.validate()) goto restart;
        std::uintptr_t expected = word_of(curr);
        if (!prev->next.compare_exchange_strong(expected, strip_mark(nextw),
                                                std::memory_order_acq_rel))
          goto restart;
        currw = strip_mark(nextw);
        continue;
      }
      if (ck >= key) {
        h.set_hazard(0, prev);
        h.set_hazard(1, curr);
        h.set_hazard(2, node_of(nextw));
        if (!h.validate()) goto restart;
        if (prev->next.load(std::memory_order_acquire) != word_of(curr))
          goto restart;  // position went stale before we protected it
        pos = {prev, curr, nextw};
        return ck == key;
      }
      prev = curr;
      currw = nextw;
    }
  }
}

bool List::search(std::int64_t key) {
  reclaim::Handle& h = domain_.local_handle();
  Position pos;
  bool found = find(h, key, pos);
  h.unprotect_all();
  return found;
}

bool List::insert(std::int64_t key, std::int64_t value) {
  reclaim::Handle& h = domain_.local_handle();
  Node* node = nullptr;
  Position pos;
  for (;;) {
    if (find(h, key, pos)) {
      h.unprotect_all();
      if (node != nullptr) oam::free_(node);  // never published
      return false;
    }
    if (node == nullptr) node = alloc_node(key, value, 0);
    node->next.store(word_of(pos.curr), std::memory_order_relaxed);
    std::uintptr_t expected = word_of(pos.curr);
    if (pos.prev->next.compare_exchange_strong(expected, word_of(node),
                                               std::memory_order_acq_rel)) {
      h.unprotect_all();
      return true;
    }
  }
}

bool List::remove(std::int64_t key) {
  reclaim::Handle& h = domain_.local_handle();
  Position pos;
  for (;;) {
    if (!find(h, key, pos)) {
      h.unprotect_all();
      return false;
    }
    Node* curr = pos.curr;
    std::uintptr_t nextw = curr->next.load(std::memory_order_acquire);
    if (is_marked(nextw)) continue;  // another remover won; re-find
    if (!curr->next.compare_exchange_strong(nextw, nextw | 1,
                                            std::memory_order_acq_rel))
      continue;
    // We own the logical deletion. Once marked, curr's successor is frozen.
    std::uintptr_t expected = word_of(curr);
    if (!pos.prev->next.compare_exchange_strong(expected, nextw,
                                                std::memory_order_acq_rel)) {
      Position unused;
      find(h, key, unused);  // helping traversal finishes the unlink
    }
    h.retire(curr);  // exactly once, by the mark winner
    h.unprotect_all();
    return true;
  }
}

}  // namespace oam::lockfree
