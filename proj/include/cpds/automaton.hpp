#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpds/deadline.hpp"
#include "cpds/model.hpp"
#include "cpds/sets.hpp"
#include "cpds/wordgraph.hpp"

namespace cpds {

using StateId = int;
using TransId = int;
using StateSet = IdSet;

class AutomatonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Provenance of an order-1 transition.  `step` is the saturation iteration
// (naive engine) or the worklist timestamp (fast engine); initial transitions
// carry kind Initial and step 0.
enum class JustKind { Initial, Rule, RuleTrans, RuleSet, RuleTransSet };

struct Justification {
  JustKind kind = JustKind::Initial;
  RuleId rule = -1;
  TransId trans = -1;
  std::vector<TransId> set;
  std::uint64_t step = 0;
};

struct StateInfo {
  int order = 1;
  std::string name;      // empty for minted states
  StateId parent = -1;   // minted states: the state whose transition they are the middle of
  StateSet key;          // minted states: the target set of that transition
  Control control = -1;  // control state q_p
  bool final = false;
};

struct Transition1 {
  StateId source = -1;
  Symbol symbol = -1;
  StateSet branch;
  StateSet target;
  Justification just;
};

// q --(a, Q_br)--> (Q_1, ..., Q_k) with k the order of q; targets[j-1] is Q_j.
struct LongForm {
  StateId source = -1;
  Symbol symbol = -1;
  StateSet branch;
  std::vector<StateSet> targets;
  friend bool operator==(const LongForm&, const LongForm&) = default;
};

// A short-form transition: order k >= 2 gives source --middle--> target; order 1
// gives source --(symbol, branch)--> target with transition id `id`.
struct ShortForm {
  int order = 1;
  StateId source = -1;
  StateId middle = -1;
  Symbol symbol = -1;
  StateSet branch;
  StateSet target;
  TransId id = -1;
};

struct AddResult {
  TransId id = -1;
  bool added = false;
  std::vector<ShortForm> created;
};

// A lifted transition from a set of states: one chosen long form per state,
// unioned component-wise.  `chosen` lists the order-1 transitions used.
struct Lifted {
  StateSet branch;
  std::vector<StateSet> targets;
  std::vector<TransId> chosen;
};

// The order-k states reachable from an order-n state q through a chain of
// higher-order transitions, with the target sets passed on the way.
struct Chain {
  StateId state = -1;
  std::vector<StateSet> upper;  // upper[j] is the target set at order k+1+j
};

class StackAutomaton {
 public:
  StackAutomaton(int order, int num_symbols) : order_(order), num_symbols_(num_symbols) {
    if (order < 1) throw AutomatonError("automaton order must be at least 1");
    by_symbol_.resize(static_cast<std::size_t>(num_symbols));
  }

  int order() const { return order_; }
  int num_symbols() const { return num_symbols_; }
  int num_states() const { return static_cast<int>(states_.size()); }
  const StateInfo& state(StateId q) const { return states_.at(static_cast<std::size_t>(q)); }

  StateId add_state(int order, const std::string& name) {
    if (order < 1 || order > order_) throw AutomatonError("state order out of range for '" + name + "'");
    if (name.empty()) throw AutomatonError("named state needs a name");
    if (names_.count(name)) throw AutomatonError("duplicate state '" + name + "'");
    StateId id = new_state(order);
    states_[static_cast<std::size_t>(id)].name = name;
    names_.emplace(name, id);
    return id;
  }

  StateId find_state(const std::string& name) const {
    auto it = names_.find(name);
    return it == names_.end() ? -1 : it->second;
  }

  StateId control_state(Control c) const {
    return c >= 0 && static_cast<std::size_t>(c) < controls_.size() ? controls_[static_cast<std::size_t>(c)] : -1;
  }

  StateId ensure_control_state(Control c, const std::string& name) {
    if (c < 0) throw AutomatonError("invalid control");
    if (static_cast<std::size_t>(c) >= controls_.size()) controls_.resize(static_cast<std::size_t>(c) + 1, -1);
    StateId& slot = controls_[static_cast<std::size_t>(c)];
    if (slot >= 0) return slot;
    StateId existing = find_state(name);
    if (existing >= 0) {
      if (states_[static_cast<std::size_t>(existing)].order != order_)
        throw AutomatonError("control state '" + name + "' must have order " + std::to_string(order_));
      slot = existing;
    } else {
      slot = add_state(order_, name);
    }
    states_[static_cast<std::size_t>(slot)].control = c;
    return slot;
  }

  int num_controls() const { return static_cast<int>(controls_.size()); }

  bool is_minted(StateId q) const { return state(q).parent >= 0; }
  bool is_initial(StateId q) const { return is_minted(q) || state(q).control >= 0; }

  void set_final(StateId q, bool f = true) { states_.at(static_cast<std::size_t>(q)).final = f; }
  bool is_final(StateId q) const { return state(q).final; }
  StateSet finals(int order) const {
    StateSet out;
    for (StateId q = 0; q < num_states(); ++q)
      if (states_[static_cast<std::size_t>(q)].final && states_[static_cast<std::size_t>(q)].order == order) out.push_back(q);
    return out;
  }

  // Middle state of the transition src --> Q, or -1 when absent.
  StateId child(StateId src, const StateSet& q) const {
    auto it = child_index_.find(ChildKey{src, q});
    return it == child_index_.end() ? -1 : it->second;
  }

  const std::vector<std::pair<StateSet, StateId>>& children_of(StateId q) const {
    return children_.at(static_cast<std::size_t>(q));
  }

  int num_transitions() const { return static_cast<int>(trans_.size()); }
  const Transition1& transition(TransId t) const { return trans_.at(static_cast<std::size_t>(t)); }
  void set_justification(TransId t, Justification j) { trans_.at(static_cast<std::size_t>(t)).just = std::move(j); }

  const std::vector<TransId>& transitions_from(StateId q, Symbol a) const {
    static const std::vector<TransId> none;
    auto it = by_source_symbol_.find(source_symbol_key(q, a));
    return it == by_source_symbol_.end() ? none : it->second;
  }
  const std::vector<TransId>& transitions_reading(Symbol a) const { return by_symbol_.at(static_cast<std::size_t>(a)); }

  // Number of short-form transitions of all orders.
  std::size_t num_short_forms() const { return child_index_.size() + trans_.size(); }

  // Adds a long-form transition, minting intermediate states as needed.
  AddResult add_long(const LongForm& t, const Justification& j) {
    check_long(t);
    AddResult res;
    StateId cur = t.source;
    for (int lvl = state(t.source).order; lvl >= 2; --lvl) {
      const StateSet& q = t.targets[static_cast<std::size_t>(lvl - 1)];
      StateId mid = child(cur, q);
      if (mid < 0) {
        mid = new_state(lvl - 1);
        states_[static_cast<std::size_t>(mid)].parent = cur;
        states_[static_cast<std::size_t>(mid)].key = q;
        child_index_.emplace(ChildKey{cur, q}, mid);
        children_[static_cast<std::size_t>(cur)].emplace_back(q, mid);
        res.created.push_back(ShortForm{lvl, cur, mid, -1, {}, q, -1});
      }
      cur = mid;
    }
    TransKey key{cur, t.symbol, t.branch, t.targets[0]};
    auto it = trans_index_.find(key);
    if (it != trans_index_.end()) {
      res.id = it->second;
      return res;
    }
    const TransId id = static_cast<TransId>(trans_.size());
    trans_.push_back(Transition1{cur, t.symbol, t.branch, t.targets[0], j});
    trans_index_.emplace(std::move(key), id);
    by_source_symbol_[source_symbol_key(cur, t.symbol)].push_back(id);
    by_symbol_[static_cast<std::size_t>(t.symbol)].push_back(id);
    res.id = id;
    res.added = true;
    res.created.push_back(ShortForm{1, cur, -1, t.symbol, t.branch, t.targets[0], id});
    return res;
  }

  std::optional<TransId> find_long(const LongForm& t) const {
    if (t.source < 0 || t.source >= num_states() ||
        t.targets.size() != static_cast<std::size_t>(state(t.source).order))
      return std::nullopt;
    StateId cur = t.source;
    for (int lvl = state(t.source).order; lvl >= 2; --lvl) {
      cur = child(cur, t.targets[static_cast<std::size_t>(lvl - 1)]);
      if (cur < 0) return std::nullopt;
    }
    auto it = trans_index_.find(TransKey{cur, t.symbol, t.branch, t.targets[0]});
    if (it == trans_index_.end()) return std::nullopt;
    return it->second;
  }

  // Expands a long form into its short forms.  Middle states that do not exist
  // yet are reported as -1, as is the order-1 id of a missing transition.
  std::vector<ShortForm> extract_short(const LongForm& t) const {
    std::vector<ShortForm> out;
    StateId cur = t.source;
    for (int lvl = state(t.source).order; lvl >= 2; --lvl) {
      const StateSet& q = t.targets[static_cast<std::size_t>(lvl - 1)];
      StateId mid = cur < 0 ? -1 : child(cur, q);
      out.push_back(ShortForm{lvl, cur, mid, -1, {}, q, -1});
      cur = mid;
    }
    TransId id = -1;
    if (auto f = find_long(t)) id = *f;
    out.push_back(ShortForm{1, cur, -1, t.symbol, t.branch, t.targets[0], id});
    return out;
  }

  // Walks the parent chain of an order-1 transition back to its root state.
  LongForm long_form(TransId id) const {
    const Transition1& t = transition(id);
    LongForm lf;
    lf.symbol = t.symbol;
    lf.branch = t.branch;
    lf.targets.push_back(t.target);
    StateId cur = t.source;
    while (is_minted(cur)) {
      lf.targets.push_back(state(cur).key);
      cur = state(cur).parent;
    }
    lf.source = cur;
    return lf;
  }

  // The ancestor of q at the given order along the parent chain, or -1.
  StateId ancestor(StateId q, int order) const {
    StateId cur = q;
    while (cur >= 0 && state(cur).order < order) cur = state(cur).parent;
    return cur >= 0 && state(cur).order == order ? cur : -1;
  }

  StateId root(StateId q) const {
    while (is_minted(q)) q = state(q).parent;
    return q;
  }

  // All long forms from q reading a, paired with their order-1 transition id.
  void for_each_long_from(StateId q, Symbol a, const std::function<void(TransId, const LongForm&)>& f) const {
    LongForm lf;
    lf.source = q;
    lf.symbol = a;
    lf.targets.resize(static_cast<std::size_t>(state(q).order));
    enumerate_long(q, a, lf, f);
  }

  std::vector<std::pair<TransId, LongForm>> long_forms_from(StateId q, Symbol a) const {
    std::vector<std::pair<TransId, LongForm>> out;
    for_each_long_from(q, a, [&](TransId id, const LongForm& lf) { out.emplace_back(id, lf); });
    return out;
  }

  bool reads(StateId q, Symbol a) const {
    bool found = false;
    for_each_long_from(q, a, [&](TransId, const LongForm&) { found = true; });
    return found;
  }

  // Chains q --q_{n-1}--> Q_n, ..., q_{k+1} --q_k--> Q_{k+1} from q down to order k.
  std::vector<Chain> chains(StateId q, int k) const {
    std::vector<Chain> out;
    Chain cur{q, {}};
    collect_chains(q, k, cur, out);
    return out;
  }

  // Lifted transitions S --(a, Q_br)--> (Q_1..Q_k) from a set of order-k states.
  // Combinations whose branch sets mix orders are dropped.  Partial
  // combinations with the same branch and targets are interchangeable, so
  // only the first one found is extended.
  std::vector<Lifted> lifted(const StateSet& s, Symbol a, int k, const Deadline* deadline = nullptr) const {
    std::vector<Lifted> acc(1);
    std::uint64_t work = 0;
    acc[0].targets.resize(static_cast<std::size_t>(k));
    for (StateId q : s) {
      auto options = long_forms_from(q, a);
      std::vector<Lifted> next;
      std::set<std::pair<StateSet, std::vector<StateSet>>> seen;
      for (const Lifted& base : acc) {
        for (const auto& [id, lf] : options) {
          if (deadline && (++work & 0xfff) == 0) deadline->check();
          Lifted l = base;
          l.branch = set_union(l.branch, lf.branch);
          if (branch_order(l.branch) < 0) continue;
          for (int j = 0; j < k; ++j)
            l.targets[static_cast<std::size_t>(j)] = set_union(l.targets[static_cast<std::size_t>(j)], lf.targets[static_cast<std::size_t>(j)]);
          if (!seen.emplace(l.branch, l.targets).second) continue;
          insert(l.chosen, id);
          next.push_back(std::move(l));
        }
      }
      acc = std::move(next);
      if (acc.empty()) break;
    }
    return acc;
  }

  // Order of the states in a branch set: 0 when empty, -1 when mixed.
  int branch_order(const StateSet& br) const {
    if (br.empty()) return 0;
    const int k = state(br.front()).order;
    for (StateId q : br)
      if (state(q).order != k) return -1;
    return k;
  }

  // Maximal labelling of a word graph: labels[v] is the set of states from
  // which the stack starting at node v is accepted.
  template <class S>
  std::vector<StateSet> label(const WordGraph<S>& g) const {
    std::vector<StateSet> lab(g.size());
    std::vector<StateSet> finals_by_order(static_cast<std::size_t>(order_) + 1);
    for (int k = 1; k <= order_; ++k) finals_by_order[static_cast<std::size_t>(k)] = finals(k);
    for (int v = static_cast<int>(g.size()) - 1; v >= 0; --v) {
      const auto& n = g.node(v);
      StateSet& out = lab[static_cast<std::size_t>(v)];
      if (n.order > order_) continue;
      if (n.len == 0) {
        out = finals_by_order[static_cast<std::size_t>(n.order)];
        continue;
      }
      const StateSet& rest = lab[static_cast<std::size_t>(n.next)];
      if (n.order == 1) {
        const Symbol a = symbol_of(*n.label);
        if (a < 0 || a >= num_symbols_) continue;
        for (TransId id : by_symbol_[static_cast<std::size_t>(a)]) {
          const Transition1& t = trans_[static_cast<std::size_t>(id)];
          if (!is_subset(t.target, rest)) continue;
          if (!branch_satisfied(t.branch, n, lab)) continue;
          out.push_back(t.source);
        }
      } else {
        for (StateId mid : lab[static_cast<std::size_t>(n.head)]) {
          const StateInfo& info = states_[static_cast<std::size_t>(mid)];
          if (info.parent >= 0 && is_subset(info.key, rest)) out.push_back(info.parent);
        }
      }
      normalize(out);
    }
    return lab;
  }

  // Whether the link condition of an order-1 transition holds at a character node.
  template <class Node>
  bool branch_satisfied(const StateSet& branch, const Node& n, const std::vector<StateSet>& lab) const {
    if (branch.empty()) return true;
    if (!n.link || n.link_target < 0) return false;
    if (state(branch.front()).order != n.link->order) return false;
    return is_subset(branch, lab[static_cast<std::size_t>(n.link_target)]);
  }

  template <class S>
  bool accepts(const S& w, const StateSet& s) const {
    if (s.empty()) return true;
    if (w.order() < 1) return false;
    WordGraph<S> g(w);
    auto lab = label(g);
    return is_subset(s, lab[static_cast<std::size_t>(g.root())]);
  }

  template <class S>
  bool accepts(const S& w, StateId q) const {
    return accepts(w, StateSet{q});
  }

  // Non-emptiness fixpoint starting from all final states.
  std::vector<bool> nonempty_states() const {
    std::vector<bool> ne(states_.size(), false);
    for (std::size_t q = 0; q < states_.size(); ++q) ne[q] = states_[q].final;
    auto all = [&](const StateSet& s) {
      for (StateId q : s)
        if (!ne[static_cast<std::size_t>(q)]) return false;
      return true;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Transition1& t : trans_) {
        if (ne[static_cast<std::size_t>(t.source)]) continue;
        if (all(t.target) && all(t.branch)) ne[static_cast<std::size_t>(t.source)] = changed = true;
      }
      for (std::size_t m = 0; m < states_.size(); ++m) {
        const StateInfo& info = states_[m];
        if (info.parent < 0 || ne[static_cast<std::size_t>(info.parent)]) continue;
        if (ne[m] && all(info.key)) ne[static_cast<std::size_t>(info.parent)] = changed = true;
      }
    }
    return ne;
  }

  bool is_nonempty(StateId q) const { return nonempty_states()[static_cast<std::size_t>(q)]; }

  // Checks the conventions expected of an initial automaton: initial states
  // (control states and middle states) have no incoming transitions and are
  // not final.
  std::optional<std::string> check_initial_conventions() const {
    std::vector<bool> incoming(states_.size(), false);
    for (const Transition1& t : trans_) {
      for (StateId q : t.target) incoming[static_cast<std::size_t>(q)] = true;
      for (StateId q : t.branch) incoming[static_cast<std::size_t>(q)] = true;
    }
    for (const auto& [key, mid] : child_index_)
      for (StateId q : key.set) incoming[static_cast<std::size_t>(q)] = true;
    for (StateId q = 0; q < num_states(); ++q) {
      if (!is_initial(q)) continue;
      if (incoming[static_cast<std::size_t>(q)]) return "initial state " + state_name(q) + " has an incoming transition";
      if (is_final(q)) return "initial state " + state_name(q) + " is final";
    }
    for (StateId q : controls_)
      if (q >= 0 && state(q).order != order_) return "control state " + state_name(q) + " has the wrong order";
    return std::nullopt;
  }

  // Canonical name: the given name, or parent.{Q} for minted states.
  std::string state_name(StateId q) const {
    if (q < 0) return "_";
    if (names_cache_.size() < states_.size()) names_cache_.resize(states_.size());
    std::string& cached = names_cache_[static_cast<std::size_t>(q)];
    if (!cached.empty()) return cached;
    const StateInfo& info = state(q);
    std::string out = info.parent < 0 ? info.name : state_name(info.parent) + "." + set_name(info.key);
    cached = out;
    return out;
  }

  std::string set_name(const StateSet& s) const {
    std::vector<std::string> names;
    for (StateId q : s) names.push_back(state_name(q));
    std::sort(names.begin(), names.end());
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
    return out + "}";
  }

 private:
  struct ChildKey {
    StateId parent;
    StateSet set;
    friend bool operator==(const ChildKey&, const ChildKey&) = default;
  };
  struct ChildKeyHash {
    std::size_t operator()(const ChildKey& k) const {
      return hash_mix(IdSetHash{}(k.set), static_cast<std::size_t>(k.parent));
    }
  };
  struct TransKey {
    StateId source;
    Symbol symbol;
    StateSet branch;
    StateSet target;
    friend bool operator==(const TransKey&, const TransKey&) = default;
  };
  struct TransKeyHash {
    std::size_t operator()(const TransKey& k) const {
      std::size_t h = hash_mix(static_cast<std::size_t>(k.source), static_cast<std::size_t>(k.symbol));
      h = hash_mix(h, IdSetHash{}(k.branch));
      return hash_mix(h, IdSetHash{}(k.target));
    }
  };

  static Symbol symbol_of(Symbol s) { return s; }
  template <class L>
  static Symbol symbol_of(const L& l) {
    return l.symbol;
  }

  std::uint64_t source_symbol_key(StateId q, Symbol a) const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(q)) << 32) | static_cast<std::uint32_t>(a);
  }

  StateId new_state(int order) {
    StateInfo info;
    info.order = order;
    states_.push_back(std::move(info));
    children_.emplace_back();
    return static_cast<StateId>(states_.size() - 1);
  }

  void check_long(const LongForm& t) const {
    if (t.source < 0 || t.source >= num_states()) throw AutomatonError("unknown source state");
    const int k = state(t.source).order;
    if (t.symbol < 0 || t.symbol >= num_symbols_) throw AutomatonError("symbol out of range");
    if (t.targets.size() != static_cast<std::size_t>(k))
      throw AutomatonError("long-form transition from " + state_name(t.source) + " needs " + std::to_string(k) + " target sets");
    for (int j = 1; j <= k; ++j)
      for (StateId q : t.targets[static_cast<std::size_t>(j - 1)]) {
        if (q < 0 || q >= num_states() || state(q).order != j)
          throw AutomatonError("target set at order " + std::to_string(j) + " contains a state of another order");
      }
    const int bo = branch_order(t.branch);
    if (bo < 0) throw AutomatonError("branch set spans multiple orders");
    if (bo == 1) throw AutomatonError("branch set must contain states of order 2 or more");
  }

  void enumerate_long(StateId q, Symbol a, LongForm& lf, const std::function<void(TransId, const LongForm&)>& f) const {
    const int k = state(q).order;
    if (k == 1) {
      for (TransId id : transitions_from(q, a)) {
        const Transition1& t = trans_[static_cast<std::size_t>(id)];
        lf.branch = t.branch;
        lf.targets[0] = t.target;
        f(id, lf);
      }
      return;
    }
    for (const auto& [set, mid] : children_[static_cast<std::size_t>(q)]) {
      lf.targets[static_cast<std::size_t>(k - 1)] = set;
      enumerate_long(mid, a, lf, f);
    }
  }

  void collect_chains(StateId q, int k, Chain& cur, std::vector<Chain>& out) const {
    if (state(q).order == k) {
      Chain c{q, std::vector<StateSet>(cur.upper.rbegin(), cur.upper.rend())};
      out.push_back(std::move(c));
      return;
    }
    for (const auto& [set, mid] : children_[static_cast<std::size_t>(q)]) {
      cur.upper.push_back(set);
      collect_chains(mid, k, cur, out);
      cur.upper.pop_back();
    }
  }

  int order_;
  int num_symbols_;
  std::vector<StateInfo> states_;
  std::unordered_map<std::string, StateId> names_;
  std::vector<StateId> controls_;
  std::vector<std::vector<std::pair<StateSet, StateId>>> children_;
  std::unordered_map<ChildKey, StateId, ChildKeyHash> child_index_;
  std::vector<Transition1> trans_;
  std::unordered_map<TransKey, TransId, TransKeyHash> trans_index_;
  std::unordered_map<std::uint64_t, std::vector<TransId>> by_source_symbol_;
  std::vector<std::vector<TransId>> by_symbol_;
  mutable std::vector<std::string> names_cache_;
};

}  // namespace cpds
