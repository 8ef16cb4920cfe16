#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/model.hpp"
#include "cpds/saturation.hpp"

namespace cpds {

// Worklist saturation with sources, targets and trip-wires.  Computes the same
// automaton as saturate_naive while processing each transition exactly once.
class FastSaturation {
 public:
  FastSaturation(const Cpds& m, const StackAutomaton& a0, const SaturationOptions& opt)
      : m_(m), opt_(opt), n_(m.order) {
    m_.validate();
    res_.automaton = prepare_initial(m, a0);
    res_.initial_transitions = static_cast<std::size_t>(a().num_transitions());
    rules_by_to_.resize(static_cast<std::size_t>(m.num_controls()));
    for (RuleId r = 0; r < m.num_rules(); ++r) {
      const Rule& rule = m.rules[static_cast<std::size_t>(r)];
      if (!rule.alternating) rules_by_to_[static_cast<std::size_t>(rule.to)].push_back(r);
    }
  }

  SaturationResult run() {
    StackAutomaton& aut = a();
    // Every initial short form starts on the worklist.
    for (StateId q = 0; q < aut.num_states(); ++q)
      for (const auto& [set, mid] : aut.children_of(q)) enqueue(ShortForm{aut.state(q).order, q, mid, -1, {}, set, -1});
    for (TransId t = 0; t < aut.num_transitions(); ++t) {
      const Transition1& tr = aut.transition(t);
      enqueue(ShortForm{1, tr.source, -1, tr.symbol, tr.branch, tr.target, t});
    }
    // The all-empty targets.
    for (int k = 2; k <= n_; ++k) add_target(Target{k, {}, {}, -1, {}, {}, {}});
    for (Symbol s = 0; s < m_.num_symbols(); ++s) add_target(Target{1, {}, {}, s, {}, {}, {}});

    for (RuleId r = 0; r < m_.num_rules(); ++r) {
      const Rule& rule = m_.rules[static_cast<std::size_t>(r)];
      if (rule.alternating) {
        StateSet s;
        for (Control c : rule.targets) s.push_back(aut.control_state(c));
        normalize(s);
        for (Symbol sym = 0; sym < m_.num_symbols(); ++sym)
          create_trip(n_, VName{rule.from, {}}, -1, sym, s, SrcJust{r, SrcJust::RuleOnly, -1, -1});
        continue;
      }
      const StateId qt = aut.control_state(rule.to);
      const Operation& op = rule.op;
      if (op.kind == OpKind::Pop && op.order == n_) {
        auto targets = std::vector<StateSet>(static_cast<std::size_t>(n_));
        targets[static_cast<std::size_t>(n_ - 1)] = {qt};
        guarded_add(op, qt, LongForm{aut.control_state(rule.from), rule.symbol, {}, targets}, r);
      } else if (op.kind == OpKind::Collapse && op.order == n_) {
        guarded_add(op, qt, LongForm{aut.control_state(rule.from), rule.symbol, {qt}, std::vector<StateSet>(static_cast<std::size_t>(n_))}, r);
      }
    }

    while (!worklist_.empty()) {
      if (opt_.deadline && (++ticks_ & 0x3ff) == 0) opt_.deadline->check();
      ShortForm u = worklist_.back();
      worklist_.pop_back();
      mark_processed(u);
      if (opt_.trace) trace_event("process", u);
      update_rules(u);
      update_trip(u);
    }
    res_.iterations = processed_;
    return std::move(res_);
  }

  std::size_t num_sources() const { return sources_.size(); }
  std::size_t num_targets() const { return targets_.size(); }

 private:
  // A state named by a control and the target sets below it, q_{p, Q_n, ..., Q_{k+1}}.
  struct VName {
    Control control = -1;
    std::vector<StateSet> sets;  // Q_n first
    friend bool operator<(const VName& x, const VName& y) {
      return std::tie(x.control, x.sets) < std::tie(y.control, y.sets);
    }
    friend bool operator==(const VName&, const VName&) = default;
  };

  struct SrcJust {
    enum Kind { RuleOnly, Order1, OrderK };
    RuleId rule = -1;
    Kind kind = RuleOnly;
    TransId trans = -1;   // Order1: the order-1 transition
    StateId middle = -1;  // OrderK: middle state of the order-k transition
  };

  struct Source {
    int order;
    VName name;
    StateId lower;  // -1 for bottom
    Symbol symbol;
    StateSet set;
    SrcJust just;
  };

  struct Target {
    int order;
    StateSet set;
    StateSet countdown;
    Symbol symbol;  // order 1 only
    StateSet label;
    StateSet reached;
    std::vector<TransId> just;  // order 1 only
  };

  using SourceKey = std::tuple<int, VName, StateId, Symbol, StateSet>;
  using TargetKey = std::tuple<int, StateSet, StateSet, Symbol, StateSet, StateSet>;
  struct TargetKeyHash {
    std::size_t operator()(const TargetKey& k) const {
      IdSetHash h;
      std::size_t out = static_cast<std::size_t>(std::get<0>(k)) * 31 + static_cast<std::size_t>(std::get<3>(k) + 1);
      out = hash_mix(out, h(std::get<1>(k)));
      out = hash_mix(out, h(std::get<2>(k)));
      out = hash_mix(out, h(std::get<4>(k)));
      return hash_mix(out, h(std::get<5>(k)));
    }
  };
  using MatchKey = std::tuple<int, StateSet, Symbol>;
  using WaitKey = std::tuple<int, StateId, Symbol>;

  struct PendingGuard {
    std::vector<Symbol> guard;
    LongForm lf;
    RuleId rule;
    bool fired = false;
  };

  StackAutomaton& a() { return res_.automaton; }

  // Symbol component used for matching: targets and sources above order 1 ignore it.
  static Symbol match_symbol(int order, Symbol s) { return order == 1 ? s : -1; }

  void enqueue(const ShortForm& u) {
    worklist_.push_back(u);
    note_reads(u);
  }

  void mark_processed(const ShortForm& u) {
    ++processed_;
    processed_by_source_[u.source].push_back(u);
  }

  // Maintains reads(q, b): q has a long form reading b in Trans or Rel.  A
  // middle state is linked to its parent from the moment it is minted, so
  // only order-1 transitions add new readable symbols.
  void note_reads(const ShortForm& u) {
    if (u.order == 1) mark_reads(u.source, u.symbol);
  }

  void mark_reads(StateId q, Symbol b) {
    StackAutomaton& aut = a();
    StateId cur = q;
    while (cur >= 0) {
      auto& set = reads_[cur];
      if (!set.insert(b).second) return;
      release_guards(cur, b);
      cur = aut.state(cur).parent;
    }
  }

  void release_guards(StateId q, Symbol b) {
    auto it = pending_guards_.find(q);
    if (it == pending_guards_.end()) return;
    for (std::size_t i = 0; i < pending_guards_[q].size(); ++i) {
      PendingGuard& g = pending_guards_[q][i];
      if (g.fired || !std::binary_search(g.guard.begin(), g.guard.end(), b)) continue;
      g.fired = true;
      LongForm lf = g.lf;
      RuleId r = g.rule;
      add_worklist(lf, Justification{JustKind::Rule, r, -1, {}, 0});
    }
  }

  bool reads(StateId q, Symbol b) const {
    auto it = reads_.find(q);
    return it != reads_.end() && it->second.count(b) > 0;
  }

  // Adds a pop or collapse consequence, deferring it until the pivot state reads
  // a guard symbol when the operation is guarded.
  void guarded_add(const Operation& op, StateId pivot, const LongForm& lf, RuleId r) {
    if (op.guard) {
      for (Symbol b : *op.guard)
        if (reads(pivot, b)) {
          add_worklist(lf, Justification{JustKind::Rule, r, -1, {}, 0});
          return;
        }
      pending_guards_[pivot].push_back(PendingGuard{*op.guard, lf, r, false});
      return;
    }
    add_worklist(lf, Justification{JustKind::Rule, r, -1, {}, 0});
  }

  void add_worklist(const LongForm& lf, Justification j) {
    if (opt_.mode == SatMode::NonAlternating && lf.targets.back().size() > 1) return;
    StackAutomaton& aut = a();
    if (aut.find_long(lf)) return;
    AddResult res = aut.add_long(lf, j);
    if (res.added) {
      j.step = aut.num_short_forms();
      aut.set_justification(res.id, j);
    }
    for (const ShortForm& u : res.created) {
      enqueue(u);
      if (opt_.trace) trace_event("add", u);
    }
  }

  // The control and target sets naming a state on a chain from a control state.
  std::optional<VName> name_of(StateId q) {
    StackAutomaton& aut = a();
    VName v;
    StateId cur = q;
    std::vector<StateSet> sets;
    while (aut.is_minted(cur)) {
      sets.push_back(aut.state(cur).key);
      cur = aut.state(cur).parent;
    }
    if (aut.state(cur).control < 0 || aut.state(cur).order != n_) return std::nullopt;
    v.control = aut.state(cur).control;
    v.sets.assign(sets.rbegin(), sets.rend());
    return v;
  }

  void update_rules(const ShortForm& u) {
    StackAutomaton& aut = a();
    auto name = name_of(u.source);
    if (!name) return;
    const Control pt = name->control;
    if (u.order >= 2) {
      const int k = u.order;
      for (RuleId r : rules_by_to_[static_cast<std::size_t>(pt)]) {
        const Rule& rule = m_.rules[static_cast<std::size_t>(r)];
        const Operation& op = rule.op;
        const StateId qp = aut.control_state(rule.from);
        if ((op.kind == OpKind::Pop || op.kind == OpKind::Collapse) && op.order == k - 1) {
          std::vector<StateSet> targets(static_cast<std::size_t>(n_));
          targets[static_cast<std::size_t>(k - 1)] = u.target;
          for (int j = k + 1; j <= n_; ++j)
            targets[static_cast<std::size_t>(j - 1)] = name->sets[static_cast<std::size_t>(n_ - j)];
          StateSet branch;
          if (op.kind == OpKind::Pop)
            targets[static_cast<std::size_t>(k - 2)] = {u.middle};
          else
            branch = {u.middle};
          guarded_add(op, u.middle, LongForm{qp, rule.symbol, branch, targets}, r);
        } else if (op.kind == OpKind::Push && op.order == k) {
          create_trip(k, VName{rule.from, name->sets}, u.middle, rule.symbol, u.target,
                      SrcJust{r, SrcJust::OrderK, -1, u.middle});
        }
      }
      return;
    }
    for (RuleId r : rules_by_to_[static_cast<std::size_t>(pt)]) {
      const Rule& rule = m_.rules[static_cast<std::size_t>(r)];
      const Operation& op = rule.op;
      if (op.kind == OpKind::Rew && op.symbol == u.symbol) {
        std::vector<StateSet> targets(static_cast<std::size_t>(n_));
        targets[0] = u.target;
        for (int j = 2; j <= n_; ++j) targets[static_cast<std::size_t>(j - 1)] = name->sets[static_cast<std::size_t>(n_ - j)];
        add_worklist(LongForm{aut.control_state(rule.from), rule.symbol, u.branch, targets},
                     Justification{JustKind::RuleTrans, r, u.id, {}, 0});
      } else if (op.kind == OpKind::PushChar && op.symbol == u.symbol) {
        const int k = op.order;
        const int bo = aut.branch_order(u.branch);
        if (bo != 0 && bo != k) continue;
        VName v{rule.from, name->sets};
        if (k >= 2) {
          StateSet& slot = v.sets[static_cast<std::size_t>(n_ - k)];
          slot = set_union(slot, u.branch);
        }
        create_trip(1, v, -1, rule.symbol, u.target, SrcJust{r, SrcJust::Order1, u.id, -1});
      }
    }
  }

  void update_trip(const ShortForm& u) {
    const WaitKey key{u.order, u.source, match_symbol(u.order, u.symbol)};
    for (std::size_t i = 0;; ++i) {
      auto it = waiting_.find(key);
      if (it == waiting_.end() || i >= it->second.size()) break;
      proc_targ(it->second[i], u);
    }
  }

  void create_trip(int k, const VName& name, StateId lower, Symbol a, const StateSet& set, const SrcJust& jus) {
    const Symbol ms = match_symbol(k, a);
    SourceKey key{k, name, lower, a, set};
    if (source_index_.count(key)) return;
    const int sid = static_cast<int>(sources_.size());
    sources_.push_back(Source{k, name, lower, a, set, jus});
    source_index_.emplace(std::move(key), sid);
    sources_by_match_[MatchKey{k, set, ms}].push_back(sid);
    if (opt_.trace) *opt_.trace << "source order " << k << " set " << a_set(set) << '\n';

    Target fresh{k, set, set, ms, {}, {}, {}};
    if (target_index_.count(target_key(fresh))) {
      auto it = complete_by_match_.find(MatchKey{k, set, ms});
      if (it == complete_by_match_.end()) return;
      for (std::size_t i = 0; i < complete_by_match_[MatchKey{k, set, ms}].size(); ++i)
        proc_src_comp_targ(sid, complete_by_match_[MatchKey{k, set, ms}][i]);
    } else {
      add_target(fresh);
    }
  }

  static TargetKey target_key(const Target& t) {
    return TargetKey{t.order, t.set, t.countdown, t.symbol, t.label, t.reached};
  }

  int add_target(const Target& t) {
    TargetKey key = target_key(t);
    auto found = target_index_.find(key);
    if (found != target_index_.end()) return found->second;
    if (opt_.deadline && (++ticks_ & 0x3ff) == 0) opt_.deadline->check();
    const int tid = static_cast<int>(targets_.size());
    targets_.push_back(t);
    target_index_.emplace(std::move(key), tid);
    if (t.countdown.empty()) complete_by_match_[MatchKey{t.order, t.set, t.symbol}].push_back(tid);
    if (t.countdown.empty()) return tid;
    // Targets count down their states in increasing order, so a partial target
    // waits on its smallest remaining state only.
    const StateId q = t.countdown.front();
    waiting_[WaitKey{t.order, q, t.symbol}].push_back(tid);
    // Replay already processed transitions against the new target.
    auto it = processed_by_source_.find(q);
    if (it == processed_by_source_.end()) return tid;
    const std::size_t count = it->second.size();
    for (std::size_t i = 0; i < count; ++i) {
      ShortForm u = processed_by_source_[q][i];
      if (u.order != t.order || match_symbol(u.order, u.symbol) != t.symbol) continue;
      proc_targ(tid, u);
    }
    return tid;
  }

  void proc_targ(int tid, const ShortForm& u) {
    const Target& t = targets_[static_cast<std::size_t>(tid)];
    if (t.countdown.empty() || t.countdown.front() != u.source) return;
    if (u.order != t.order || match_symbol(u.order, u.symbol) != t.symbol) return;
    Target next{t.order, t.set, StateSet(t.countdown.begin() + 1, t.countdown.end()), t.symbol, {}, set_union(t.reached, u.target), {}};
    if (t.order >= 2) {
      next.label = set_union(t.label, StateSet{u.middle});
    } else {
      next.label = set_union(t.label, u.branch);
      if (a().branch_order(next.label) < 0) return;
    }
    if (target_index_.count(target_key(next))) return;
    if (t.order == 1) {
      next.just = t.just;
      insert(next.just, u.id);
    }
    const int nid = add_target(next);
    if (!next.countdown.empty()) return;
    const MatchKey mk{next.order, next.set, next.symbol};
    for (std::size_t i = 0;; ++i) {
      auto it = sources_by_match_.find(mk);
      if (it == sources_by_match_.end() || i >= it->second.size()) break;
      proc_src_comp_targ(it->second[i], nid);
    }
  }

  void proc_src_comp_targ(int sid, int tid) {
    const Source src = sources_[static_cast<std::size_t>(sid)];
    const Target t = targets_[static_cast<std::size_t>(tid)];
    if (src.order >= 2) {
      VName name = src.name;
      name.sets.push_back(t.reached);
      StateSet next = t.label;
      if (src.lower >= 0) insert(next, src.lower);
      create_trip(src.order - 1, name, -1, src.symbol, next, src.just);
      return;
    }
    StackAutomaton& aut = a();
    std::vector<StateSet> targets(static_cast<std::size_t>(n_));
    targets[0] = t.reached;
    for (int j = 2; j <= n_; ++j) targets[static_cast<std::size_t>(j - 1)] = src.name.sets[static_cast<std::size_t>(n_ - j)];
    const LongForm lf{aut.control_state(src.name.control), src.symbol, t.label, targets};
    Justification j;
    j.rule = src.just.rule;
    switch (src.just.kind) {
      case SrcJust::RuleOnly:
        j.kind = JustKind::RuleSet;
        j.set = t.just;
        break;
      case SrcJust::Order1:
        j.kind = JustKind::RuleTransSet;
        j.trans = src.just.trans;
        j.set = t.just;
        break;
      case SrcJust::OrderK:
        decode_push(src.just.middle, t.just, j);
        break;
    }
    add_worklist(lf, j);
  }

  // Splits the transitions collected for a push_k combination into the
  // transition t from the pushing control's chain and the lifted set T.
  void decode_push(StateId middle, const std::vector<TransId>& collected, Justification& j) {
    StackAutomaton& aut = a();
    const int lower = aut.state(middle).order;
    const StateId pivot = aut.state(middle).parent;
    const int k = lower + 1;
    const StateSet& qk = aut.state(middle).key;
    j.kind = JustKind::RuleTransSet;
    bool pivot_covered = false;
    for (TransId e : collected) {
      const StateId anc = aut.ancestor(aut.transition(e).source, lower);
      if (anc == middle) {
        j.trans = e;
      } else {
        j.set.push_back(e);
        if (aut.ancestor(aut.transition(e).source, k) == pivot) pivot_covered = true;
      }
    }
    if (contains(qk, pivot) && !pivot_covered && j.trans >= 0) j.set.push_back(j.trans);
    normalize(j.set);
  }

  std::string a_set(const StateSet& s) { return a().set_name(s); }

  void trace_event(const char* what, const ShortForm& u) {
    StackAutomaton& aut = a();
    *opt_.trace << what << " order " << u.order << ' ' << aut.state_name(u.source);
    if (u.order == 1)
      *opt_.trace << " --" << m_.symbol_name(u.symbol) << '/' << aut.set_name(u.branch) << "--> " << aut.set_name(u.target);
    else
      *opt_.trace << " --" << aut.state_name(u.middle) << "--> " << aut.set_name(u.target);
    *opt_.trace << '\n';
  }

  Cpds m_;
  SaturationOptions opt_;
  int n_;
  SaturationResult res_;
  std::vector<std::vector<RuleId>> rules_by_to_;
  std::vector<ShortForm> worklist_;
  std::unordered_map<StateId, std::vector<ShortForm>> processed_by_source_;
  std::size_t processed_ = 0;
  std::uint64_t ticks_ = 0;

  std::vector<Source> sources_;
  std::map<SourceKey, int> source_index_;
  std::map<MatchKey, std::vector<int>> sources_by_match_;

  std::vector<Target> targets_;
  std::unordered_map<TargetKey, int, TargetKeyHash> target_index_;
  std::map<MatchKey, std::vector<int>> complete_by_match_;
  std::map<WaitKey, std::vector<int>> waiting_;

  std::unordered_map<StateId, std::set<Symbol>> reads_;
  std::unordered_map<StateId, std::vector<PendingGuard>> pending_guards_;
};

inline SaturationResult saturate_fast(const Cpds& m, const StackAutomaton& a0, const SaturationOptions& opt = {}) {
  FastSaturation engine(m, a0, opt);
  return engine.run();
}

}  // namespace cpds
