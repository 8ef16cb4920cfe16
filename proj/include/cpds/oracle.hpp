#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/model.hpp"
#include "cpds/saturation.hpp"
#include "cpds/witness.hpp"

namespace cpds {

using ConfigSet = std::unordered_set<Configuration, ConfigurationHash>;

struct OracleOptions {
  std::size_t stack_cap = 0;  // maximum node_count of explored stacks; 0 means no cap
  const Deadline* deadline = nullptr;
};

// Configurations reachable within a depth bound.  layers[d] holds the
// configurations first reached at depth d.
struct ReachSet {
  std::vector<std::vector<Configuration>> layers;
  ConfigSet all;
  bool complete = false;  // no new configuration appeared in the last expansion
  bool cap_hit = false;   // some successor was dropped for exceeding the stack cap

  std::size_t size() const { return all.size(); }
  bool contains(const Configuration& c) const { return all.count(c) > 0; }
};

namespace detail {

inline bool within_cap(const Stack& w, std::size_t cap) { return cap == 0 || w.node_count() <= cap; }

}  // namespace detail

// Breadth-first closure under successors, alternating branches expanded into
// every member.
inline ReachSet bounded_post(const Cpds& m, const Configuration& seed, int depth, const OracleOptions& opt = {}) {
  ReachSet r;
  r.layers.push_back({seed});
  r.all.insert(seed);
  for (int d = 0; d < depth; ++d) {
    std::vector<Configuration> next;
    for (const Configuration& c : r.layers.back()) {
      if (opt.deadline) opt.deadline->check();
      for (const Step& s : successors(m, c))
        for (const Configuration& o : s.outcome) {
          if (!detail::within_cap(o.stack, opt.stack_cap)) {
            r.cap_hit = true;
            continue;
          }
          if (r.all.insert(o).second) next.push_back(o);
        }
    }
    if (next.empty()) {
      r.complete = true;
      break;
    }
    r.layers.push_back(std::move(next));
  }
  return r;
}

// The same set computed by depth-first recursion, remembering the largest
// remaining budget with which each configuration was expanded.
inline ConfigSet bounded_post_recursive(const Cpds& m, const Configuration& seed, int depth, const OracleOptions& opt = {}) {
  std::unordered_map<Configuration, int, ConfigurationHash> budget;
  std::function<void(const Configuration&, int)> visit = [&](const Configuration& c, int left) {
    auto it = budget.find(c);
    if (it != budget.end() && it->second >= left) return;
    budget[c] = left;
    if (left == 0) return;
    for (const Step& s : successors(m, c))
      for (const Configuration& o : s.outcome)
        if (detail::within_cap(o.stack, opt.stack_cap)) visit(o, left - 1);
  };
  visit(seed, depth);
  ConfigSet out;
  for (auto& [c, left] : budget) out.insert(c);
  return out;
}

enum class OracleVerdict { Yes, NoWithinBound };

// Depth-bounded AND-OR search: yes iff some strategy tree of depth at most d
// has every leaf in L(A0).  An alternating rule needs every branch to succeed.
class LanguageOracle {
 public:
  LanguageOracle(const Cpds& m, const StackAutomaton& a0, const OracleOptions& opt = {}) : m_(m), a0_(a0), opt_(opt) {}

  OracleVerdict reaches(const Configuration& seed, int depth) { return win(seed, depth) ? OracleVerdict::Yes : OracleVerdict::NoWithinBound; }

  // Smallest depth at which the search succeeds, if any within the bound.
  std::optional<int> min_depth(const Configuration& seed, int depth) {
    for (int d = 0; d <= depth; ++d)
      if (win(seed, d)) return d;
    return std::nullopt;
  }

 private:
  struct Known {
    int lose_upto = -1;      // loses with every budget up to this one
    int win_from = 1 << 30;  // wins with every budget from this one
  };

  bool in_language(const Configuration& c) {
    auto it = accepted_.find(c);
    if (it != accepted_.end()) return it->second;
    const bool ok = accepts_named(a0_, m_, c);
    accepted_.emplace(c, ok);
    return ok;
  }

  bool win(const Configuration& c, int left) {
    if (in_language(c)) return true;
    Known& k = known_[c];
    if (left <= k.lose_upto) return false;
    if (left >= k.win_from) return true;
    if (left == 0) {
      k.lose_upto = 0;
      return false;
    }
    if (opt_.deadline && (++ticks_ & 0xff) == 0) opt_.deadline->check();
    bool ok = false;
    for (const Step& s : successors(m_, c)) {
      bool all = true;
      for (const Configuration& o : s.outcome) {
        if (!detail::within_cap(o.stack, opt_.stack_cap) || !win(o, left - 1)) {
          all = false;
          break;
        }
      }
      if (all) {
        ok = true;
        break;
      }
    }
    Known& after = known_[c];
    if (ok) after.win_from = std::min(after.win_from, left);
    else after.lose_upto = std::max(after.lose_upto, left);
    return ok;
  }

  const Cpds& m_;
  const StackAutomaton& a0_;
  OracleOptions opt_;
  std::unordered_map<Configuration, bool, ConfigurationHash> accepted_;
  std::unordered_map<Configuration, Known, ConfigurationHash> known_;
  std::uint64_t ticks_ = 0;
};

inline OracleVerdict reaches_language(const Cpds& m, const Configuration& seed, const StackAutomaton& a0, int depth,
                                      const OracleOptions& opt = {}) {
  LanguageOracle oracle(m, a0, opt);
  return oracle.reaches(seed, depth);
}

}  // namespace cpds
