#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <vector>

#include "cpds/stack.hpp"

namespace cpds {

// Small sorted sets of integers, used for state sets and transition sets.
using IdSet = std::vector<int>;

inline void normalize(IdSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline IdSet make_set(IdSet s) {
  normalize(s);
  return s;
}

inline IdSet set_union(const IdSet& a, const IdSet& b) {
  IdSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IdSet set_difference(const IdSet& a, const IdSet& b) {
  IdSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool is_subset(const IdSet& a, const IdSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool contains(const IdSet& s, int x) { return std::binary_search(s.begin(), s.end(), x); }

inline void insert(IdSet& s, int x) {
  auto it = std::lower_bound(s.begin(), s.end(), x);
  if (it == s.end() || *it != x) s.insert(it, x);
}

struct IdSetHash {
  std::size_t operator()(const IdSet& s) const {
    std::size_t h = 0x345678;
    for (int x : s) h = hash_mix(h, static_cast<std::size_t>(x));
    return h;
  }
};

}  // namespace cpds
