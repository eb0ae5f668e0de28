#pragma once

// Persistent ordered map (treap with hash-derived priorities).
// Every update returns a new map sharing structure with the old one;
// machine states keep whole stores by value without O(n) copies.
// Priorities depend only on keys, so the tree shape is canonical for
// a given key set and iteration order is the key order.

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace aam {

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

template <class K, class V, class Less = std::less<K>, class Hash = std::hash<K>>
class pmap {
  struct Node {
    K key;
    V val;
    uint64_t prio;
    std::shared_ptr<const Node> left, right;
    size_t count;
  };
  using NP = std::shared_ptr<const Node>;

  NP root_;

  static size_t count_of(const NP& n) { return n ? n->count : 0; }

  static NP make(const K& k, const V& v, uint64_t prio, NP l, NP r) {
    auto n = std::make_shared<Node>();
    const_cast<K&>(n->key) = k;
    n->val = v;
    n->prio = prio;
    n->left = std::move(l);
    n->right = std::move(r);
    n->count = 1 + count_of(n->left) + count_of(n->right);
    return n;
  }

  static NP set_rec(const NP& n, const K& k, const V& v, uint64_t prio, const Less& lt) {
    if (!n) return make(k, v, prio, nullptr, nullptr);
    if (lt(k, n->key)) {
      NP l = set_rec(n->left, k, v, prio, lt);
      if (l->prio > n->prio) return rotate_right(n, l);
      return make(n->key, n->val, n->prio, l, n->right);
    }
    if (lt(n->key, k)) {
      NP r = set_rec(n->right, k, v, prio, lt);
      if (r->prio > n->prio) return rotate_left(n, r);
      return make(n->key, n->val, n->prio, n->left, r);
    }
    return make(k, v, n->prio, n->left, n->right);
  }

  // child already replaced; pull it above n
  static NP rotate_right(const NP& n, const NP& l) {
    return make(l->key, l->val, l->prio, l->left,
                make(n->key, n->val, n->prio, l->right, n->right));
  }
  static NP rotate_left(const NP& n, const NP& r) {
    return make(r->key, r->val, r->prio,
                make(n->key, n->val, n->prio, n->left, r->left), r->right);
  }

  static NP merge(const NP& a, const NP& b) {
    if (!a) return b;
    if (!b) return a;
    if (a->prio > b->prio)
      return make(a->key, a->val, a->prio, a->left, merge(a->right, b));
    return make(b->key, b->val, b->prio, merge(a, b->left), b->right);
  }

  static NP erase_rec(const NP& n, const K& k, const Less& lt, bool& hit) {
    if (!n) return n;
    if (lt(k, n->key)) {
      NP l = erase_rec(n->left, k, lt, hit);
      if (!hit) return n;
      return make(n->key, n->val, n->prio, l, n->right);
    }
    if (lt(n->key, k)) {
      NP r = erase_rec(n->right, k, lt, hit);
      if (!hit) return n;
      return make(n->key, n->val, n->prio, n->left, r);
    }
    hit = true;
    return merge(n->left, n->right);
  }

  template <class F>
  static void walk(const NP& n, F& f) {
    if (!n) return;
    walk(n->left, f);
    f(n->key, n->val);
    walk(n->right, f);
  }

  explicit pmap(NP r) : root_(std::move(r)) {}

public:
  pmap() = default;

  size_t size() const { return count_of(root_); }
  bool empty() const { return !root_; }

  const V* find(const K& k) const {
    Less lt;
    const Node* n = root_.get();
    while (n) {
      if (lt(k, n->key)) n = n->left.get();
      else if (lt(n->key, k)) n = n->right.get();
      else return &n->val;
    }
    return nullptr;
  }

  bool contains(const K& k) const { return find(k) != nullptr; }

  pmap set(const K& k, const V& v) const {
    Less lt;
    return pmap(set_rec(root_, k, v, mix64(Hash{}(k)), lt));
  }

  pmap erase(const K& k) const {
    Less lt;
    bool hit = false;
    NP r = erase_rec(root_, k, lt, hit);
    return hit ? pmap(std::move(r)) : *this;
  }

  // in key order
  template <class F>
  void for_each(F f) const {
    walk(root_, f);
  }

  bool same_root(const pmap& o) const { return root_ == o.root_; }

  // lexicographic by (key, value); -1/0/1
  template <class CmpV>
  static int compare(const pmap& a, const pmap& b, CmpV cmpv) {
    if (a.root_ == b.root_) return 0;
    struct Iter {
      std::vector<const Node*> stack;
      void push_left(const Node* n) {
        while (n) { stack.push_back(n); n = n->left.get(); }
      }
      const Node* next() {
        if (stack.empty()) return nullptr;
        const Node* n = stack.back();
        stack.pop_back();
        push_left(n->right.get());
        return n;
      }
    };
    Iter ia, ib;
    ia.push_left(a.root_.get());
    ib.push_left(b.root_.get());
    Less lt;
    for (;;) {
      const Node* na = ia.next();
      const Node* nb = ib.next();
      if (!na && !nb) return 0;
      if (!na) return -1;
      if (!nb) return 1;
      if (lt(na->key, nb->key)) return -1;
      if (lt(nb->key, na->key)) return 1;
      int c = cmpv(na->val, nb->val);
      if (c != 0) return c;
    }
  }
};

}  // namespace aam
