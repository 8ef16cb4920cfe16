#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/model.hpp"
#include "cpds/saturation.hpp"
#include "cpds/stack.hpp"
#include "cpds/wordgraph.hpp"

namespace cpds {

// A character of an annotated run: the stack symbol and the order-1
// transitions reading it.
struct RunLabel {
  Symbol symbol = -1;
  std::vector<TransId> trans;  // sorted
  friend bool operator==(const RunLabel&, const RunLabel&) = default;
};

struct RunLabelHash {
  std::size_t operator()(const RunLabel& l) const {
    std::size_t h = static_cast<std::size_t>(l.symbol) * 0x9e3779b1u;
    for (TransId t : l.trans) h = hash_mix(h, static_cast<std::size_t>(t));
    return h;
  }
};

using Run = BasicStack<RunLabel, RunLabelHash>;

class WitnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The stack a run is over.
inline Stack project(const Run& r) {
  WordGraph<Run> g(r);
  return g.rebuild<Stack>([&](int id) { return g.node(id).label->symbol; });
}

// Annotates every character of a stack through f(node id of the character, symbol).
template <class F>
Run annotate(const Stack& w, F&& f) {
  WordGraph<Stack> g(w);
  return g.rebuild<Run>([&](int id) { return RunLabel{*g.node(id).label, f(id, *g.node(id).label)}; });
}

namespace detail {

// valid[v]: the largest set Q such that the run suffix at node v is Q-valid.
inline std::vector<StateSet> run_valid_sets(const StackAutomaton& a, const WordGraph<Run>& g) {
  std::vector<StateSet> valid(g.size());
  for (int v = static_cast<int>(g.size()) - 1; v >= 0; --v) {
    const auto& n = g.node(v);
    StateSet& out = valid[static_cast<std::size_t>(v)];
    if (n.len == 0) {
      out = a.finals(n.order);
      continue;
    }
    const StateSet& rest = valid[static_cast<std::size_t>(n.next)];
    if (n.order == 1) {
      for (TransId t : n.label->trans) {
        const Transition1& tr = a.transition(t);
        if (tr.symbol == n.label->symbol && is_subset(tr.target, rest)) out.push_back(tr.source);
      }
    } else {
      for (StateId mid : valid[static_cast<std::size_t>(n.head)]) {
        const StateInfo& info = a.state(mid);
        if (info.parent >= 0 && is_subset(info.key, rest)) out.push_back(info.parent);
      }
    }
    normalize(out);
  }
  return valid;
}

inline bool links_valid(const StackAutomaton& a, const WordGraph<Run>& g, const std::vector<StateSet>& valid) {
  for (int v = 0; v < static_cast<int>(g.size()); ++v) {
    const auto& n = g.node(v);
    if (n.order != 1 || n.len == 0) continue;
    for (TransId t : n.label->trans)
      if (!a.branch_satisfied(a.transition(t).branch, n, valid)) return false;
  }
  return true;
}

}  // namespace detail

// Q-validity of an order-n run (sets of any order are checked against the
// run's own order).
inline bool q_valid(const StackAutomaton& a, const Run& r, const StateSet& q) {
  if (q.empty()) return true;
  WordGraph<Run> g(r);
  auto valid = detail::run_valid_sets(a, g);
  return is_subset(q, valid[static_cast<std::size_t>(g.root())]);
}

inline bool link_valid(const StackAutomaton& a, const Run& r) {
  WordGraph<Run> g(r);
  return detail::links_valid(a, g, detail::run_valid_sets(a, g));
}

// Head transition of a run: the single transition annotating its top character.
inline std::optional<TransId> head_transition(const Run& r) {
  auto c = top_char(r);
  if (!c || c->label().trans.size() != 1) return std::nullopt;
  return c->label().trans.front();
}

// q-accepting: {q}-valid, link-valid and headed by a single transition.
inline bool accepting(const StackAutomaton& a, const Run& r, StateId q) {
  if (!top_char(r)) return false;
  if (!head_transition(r)) return false;
  WordGraph<Run> g(r);
  auto valid = detail::run_valid_sets(a, g);
  return contains(valid[static_cast<std::size_t>(g.root())], q) && detail::links_valid(a, g, valid);
}

// Trimmed: for every character c reached by pops whose smallest pop order is
// m, every transition at c has its order-i targets valid at the order-i
// remainder above c for all i < m.
inline bool trimmed(const StackAutomaton& a, const Run& r) {
  WordGraph<Run> g(r);
  auto valid = detail::run_valid_sets(a, g);
  // parent[v]: the node whose head is v (v is first in its list), or -1.
  std::vector<int> parent(g.size(), -1);
  for (int v = 0; v < static_cast<int>(g.size()); ++v)
    if (g.node(v).order >= 2 && g.node(v).len > 0) parent[static_cast<std::size_t>(g.node(v).head)] = v;
  const int n = g.order();
  for (int v = 0; v < static_cast<int>(g.size()); ++v) {
    const auto& node = g.node(v);
    if (node.order != 1 || node.len == 0) continue;
    for (TransId t : node.label->trans) {
      const LongForm lf = a.long_form(t);
      // A transition from a state of order k constrains orders up to k only.
      const int top = std::min(n, static_cast<int>(lf.targets.size()));
      // x walks the chain of list cells above the character; the check at
      // order i applies while every cell up to order i is first in its list.
      int x = v;
      for (int i = 1; i <= top; ++i) {
        const bool first = i < n ? parent[static_cast<std::size_t>(x)] >= 0 : x == g.root();
        if (!first) break;
        if (!is_subset(lf.targets[static_cast<std::size_t>(i - 1)], valid[static_cast<std::size_t>(g.node(x).next)])) return false;
        if (i < n) x = parent[static_cast<std::size_t>(x)];
      }
    }
  }
  return true;
}

namespace detail {

inline void count_steps(const StackAutomaton& a, const Run& r, std::map<std::uint64_t, long>& counts) {
  if (r.is_char()) {
    for (TransId t : r.label().trans) ++counts[a.transition(t).just.step];
    return;
  }
  for (const Run& c : r.children()) count_steps(a, c, counts);
}

}  // namespace detail

// u ↪_k v: the descent relation on order-k runs (v is the smaller run).
inline bool measure_less(const StackAutomaton& a, const Run& u, const Run& v, int k) {
  if (k == 1) {
    std::map<std::uint64_t, long> cu, cv;
    detail::count_steps(a, u, cu);
    detail::count_steps(a, v, cv);
    std::map<std::uint64_t, std::pair<long, long>> both;
    for (auto& [s, c] : cu) both[s].first = c;
    for (auto& [s, c] : cv) both[s].second = c;
    for (auto it = both.rbegin(); it != both.rend(); ++it) {
      if (it->second.second < it->second.first) return true;
      if (it->second.second > it->second.first) return false;
    }
    return false;
  }
  std::vector<Run> us = u.children();
  std::vector<Run> vs = v.children();
  std::reverse(us.begin(), us.end());  // index 0 is the bottom element
  std::reverse(vs.begin(), vs.end());
  const std::size_t l = us.size();
  const std::size_t lp = vs.size();
  if (lp < l) {
    if (lp == 0) return true;
    for (std::size_t i = 0; i + 1 < lp; ++i)
      if (us[i] != vs[i]) return false;
    return us[lp - 1] == vs[lp - 1] || measure_less(a, us[lp - 1], vs[lp - 1], k - 1);
  }
  if (l == 0) return false;
  for (std::size_t i = 0; i + 1 < l; ++i)
    if (us[i] != vs[i]) return false;
  for (std::size_t i = l - 1; i < lp; ++i)
    if (!measure_less(a, us[l - 1], vs[i], k - 1)) return false;
  return true;
}

inline std::uint64_t step_of(const StackAutomaton& a, TransId t) { return a.transition(t).just.step; }

// A trimmed accepting run of the configuration's stack from q_p, built from
// the membership labelling with one transition per required state.  Among
// candidates the one with the smallest justification step is chosen.
inline std::optional<Run> build_initial_run(const StackAutomaton& a, const Configuration& c) {
  const StateId q = a.control_state(c.control);
  if (q < 0 || !top_char(c.stack)) return std::nullopt;
  WordGraph<Stack> g(c.stack);
  auto lab = a.label(g);
  if (!contains(lab[static_cast<std::size_t>(g.root())], q)) return std::nullopt;
  std::vector<StateSet> demand(g.size());
  std::vector<std::vector<TransId>> chosen(g.size());
  demand[static_cast<std::size_t>(g.root())] = {q};
  for (int v = 0; v < static_cast<int>(g.size()); ++v) {
    const auto& n = g.node(v);
    const StateSet need = demand[static_cast<std::size_t>(v)];
    if (n.len == 0 || need.empty()) continue;
    const StateSet& rest = lab[static_cast<std::size_t>(n.next)];
    if (n.order == 1) {
      for (StateId s : need) {
        TransId best = -1;
        for (TransId t : a.transitions_from(s, *n.label)) {
          const Transition1& tr = a.transition(t);
          if (!is_subset(tr.target, rest) || !a.branch_satisfied(tr.branch, n, lab)) continue;
          if (best < 0 || step_of(a, t) < step_of(a, best)) best = t;
        }
        if (best < 0) throw WitnessError("labelling inconsistent with transitions");
        insert(chosen[static_cast<std::size_t>(v)], best);
        const Transition1& tr = a.transition(best);
        demand[static_cast<std::size_t>(n.next)] = set_union(demand[static_cast<std::size_t>(n.next)], tr.target);
        if (!tr.branch.empty())
          demand[static_cast<std::size_t>(n.link_target)] = set_union(demand[static_cast<std::size_t>(n.link_target)], tr.branch);
      }
    } else {
      const StateSet& heads = lab[static_cast<std::size_t>(n.head)];
      for (StateId s : need) {
        bool found = false;
        for (const auto& [set, mid] : a.children_of(s)) {
          if (!contains(heads, mid) || !is_subset(set, rest)) continue;
          insert(demand[static_cast<std::size_t>(n.head)], mid);
          demand[static_cast<std::size_t>(n.next)] = set_union(demand[static_cast<std::size_t>(n.next)], set);
          found = true;
          break;
        }
        if (!found) throw WitnessError("labelling inconsistent with transitions");
      }
    }
  }
  return g.rebuild<Run>([&](int id) { return RunLabel{*g.node(id).label, chosen[static_cast<std::size_t>(id)]}; });
}

// Membership by run annotation: the largest link-valid annotation is found by
// starting from every transition reading each character and removing those
// whose link condition fails until nothing changes.  Returns the states from
// which the whole stack has a valid run.
inline StateSet run_accepting_states(const StackAutomaton& a, const Stack& w) {
  Run r = annotate(w, [&](int, Symbol sym) { return a.transitions_reading(sym); });
  for (;;) {
    WordGraph<Run> g(r);
    auto valid = detail::run_valid_sets(a, g);
    bool changed = false;
    std::vector<std::vector<TransId>> kept(g.size());
    for (int v = 0; v < static_cast<int>(g.size()); ++v) {
      const auto& n = g.node(v);
      if (n.order != 1 || n.len == 0) continue;
      for (TransId t : n.label->trans) {
        if (a.branch_satisfied(a.transition(t).branch, n, valid)) kept[static_cast<std::size_t>(v)].push_back(t);
        else changed = true;
      }
    }
    if (!changed) return valid[static_cast<std::size_t>(g.root())];
    r = g.rebuild<Run>([&](int id) { return RunLabel{g.node(id).label->symbol, kept[static_cast<std::size_t>(id)]}; });
  }
}

inline bool membership_by_runs(const StackAutomaton& a, const Stack& w, const StateSet& s) {
  if (s.empty()) return true;
  return is_subset(s, run_accepting_states(a, w));
}

// A witness tree stored as an arena; node 0 is the root.
struct WitnessNode {
  Configuration config;
  RuleId rule = -1;  // -1 at leaves
  std::string rule_name;
  std::vector<int> children;
};

struct WitnessTree {
  std::vector<WitnessNode> nodes;

  bool empty() const { return nodes.empty(); }
  const WitnessNode& root() const { return nodes.front(); }

  bool linear() const {
    for (const auto& n : nodes)
      if (n.children.size() > 1) return false;
    return true;
  }

  // Rule names along the tree in pre-order; for a linear tree this is the trace.
  std::vector<std::string> rule_sequence() const {
    std::vector<std::string> out;
    std::vector<int> todo{0};
    while (!todo.empty() && !nodes.empty()) {
      int v = todo.back();
      todo.pop_back();
      const WitnessNode& n = nodes[static_cast<std::size_t>(v)];
      if (n.rule >= 0) out.push_back(n.rule_name);
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) todo.push_back(*it);
    }
    return out;
  }

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (int v = 0; v < static_cast<int>(nodes.size()); ++v)
      if (nodes[static_cast<std::size_t>(v)].children.empty()) out.push_back(v);
    return out;
  }
};

struct WitnessOptions {
  bool check_descent = false;  // assert r ↪_n r' at every recursive call
  bool check_runs = false;     // assert every run is trimmed and accepting
  std::size_t max_nodes = 1'000'000;
  const Deadline* deadline = nullptr;
  std::size_t* descent_checks = nullptr;  // incremented per verified descent
};

namespace detail {

inline TransId pick_at_top(const StackAutomaton& a, const Run& r, StateId pivot, int k) {
  auto c = top_char(r);
  if (!c) throw WitnessError("operation leaves no top character");
  TransId best = -1;
  for (TransId t : c->label().trans) {
    if (a.ancestor(a.transition(t).source, k) != pivot) continue;
    if (best < 0 || step_of(a, t) < step_of(a, best)) best = t;
  }
  if (best < 0) throw WitnessError("no transition from the pivot state at the new top");
  return best;
}

inline Run retag_top(const Run& r, std::vector<TransId> trans) {
  auto c = top_char(r);
  if (!c) throw WitnessError("run has no top character");
  normalize(trans);
  auto out = rew(r, RunLabel{c->label().symbol, std::move(trans)});
  if (!out) throw WitnessError("run has no top character");
  return *out;
}

}  // namespace detail

// Follows justifications from a trimmed accepting run down to runs of A0.
inline WitnessTree get_witness(const Cpds& m, const StackAutomaton& a, const Run& run0, Control control0,
                               const WitnessOptions& opt = {}) {
  WitnessTree tree;
  const int n = m.order;
  struct Work {
    int node;
    Run run;
    Control control;
  };
  tree.nodes.push_back(WitnessNode{Configuration{control0, project(run0)}, -1, {}, {}});
  std::vector<Work> work{Work{0, run0, control0}};
  auto check_run = [&](const Run& r, Control c) {
    if (!opt.check_runs) return;
    const StateId q = a.control_state(c);
    if (!accepting(a, r, q)) throw WitnessError("run is not accepting for " + m.control_name(c));
    if (!trimmed(a, r)) throw WitnessError("run is not trimmed");
  };
  check_run(run0, control0);
  std::uint64_t ticks = 0;
  while (!work.empty()) {
    if (opt.deadline && (++ticks & 0xff) == 0) opt.deadline->check();
    Work w = std::move(work.back());
    work.pop_back();
    auto head = head_transition(w.run);
    if (!head) throw WitnessError("run has no single head transition");
    const Transition1& t = a.transition(*head);
    if (a.root(t.source) != a.control_state(w.control)) throw WitnessError("head transition does not start at the control state");
    const Justification& j = t.just;
    if (j.kind == JustKind::Initial) continue;
    if (j.rule < 0 || j.rule >= m.num_rules()) throw WitnessError("justification names an unknown rule");
    const Rule& rule = m.rules[static_cast<std::size_t>(j.rule)];
    {
      WitnessNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
      node.rule = j.rule;
      node.rule_name = rule.name;
    }
    std::vector<std::pair<Run, Control>> next;
    const LongForm lf = a.long_form(*head);
    if (rule.alternating) {
      if (j.kind != JustKind::RuleSet) throw WitnessError("alternating rule with a malformed justification");
      for (Control p : rule.targets) {
        const StateId qp = a.control_state(p);
        TransId tj = -1;
        for (TransId x : j.set)
          if (a.root(a.transition(x).source) == qp) tj = x;
        if (tj < 0) throw WitnessError("alternating justification misses a branch");
        next.emplace_back(detail::retag_top(w.run, {tj}), p);
      }
    } else {
      const Operation& op = rule.op;
      const int k = op.order;
      switch (op.kind) {
        case OpKind::Pop: {
          if (j.kind != JustKind::Rule) throw WitnessError("pop with a malformed justification");
          const StateSet& sk = lf.targets[static_cast<std::size_t>(k - 1)];
          if (sk.size() != 1) throw WitnessError("pop transition without a single pivot");
          auto popped = pop(w.run, k);
          if (!popped) throw WitnessError("pop undefined on the run");
          next.emplace_back(detail::retag_top(*popped, {detail::pick_at_top(a, *popped, sk.front(), k)}), rule.to);
          break;
        }
        case OpKind::Collapse: {
          if (j.kind != JustKind::Rule) throw WitnessError("collapse with a malformed justification");
          if (lf.branch.size() != 1) throw WitnessError("collapse transition without a single pivot");
          auto collapsed = collapse(w.run, k);
          if (!collapsed) throw WitnessError("collapse undefined on the run");
          next.emplace_back(detail::retag_top(*collapsed, {detail::pick_at_top(a, *collapsed, lf.branch.front(), k)}), rule.to);
          break;
        }
        case OpKind::Rew: {
          if (j.kind != JustKind::RuleTrans) throw WitnessError("rewrite with a malformed justification");
          auto rewritten = rew(w.run, RunLabel{op.symbol, {j.trans}});
          if (!rewritten) throw WitnessError("rewrite undefined on the run");
          next.emplace_back(*rewritten, rule.to);
          break;
        }
        case OpKind::Push: {
          if (j.kind != JustKind::RuleTransSet) throw WitnessError("push with a malformed justification");
          auto pushed = push(detail::retag_top(w.run, j.set), k);
          if (!pushed) throw WitnessError("push undefined on the run");
          next.emplace_back(detail::retag_top(*pushed, {j.trans}), rule.to);
          break;
        }
        case OpKind::PushChar: {
          if (j.kind != JustKind::RuleTransSet) throw WitnessError("push with a malformed justification");
          auto pushed = push_char(detail::retag_top(w.run, j.set), RunLabel{op.symbol, {j.trans}}, k);
          if (!pushed) throw WitnessError("push undefined on the run");
          next.emplace_back(*pushed, rule.to);
          break;
        }
      }
    }
    for (auto& [r, c] : next) {
      if (opt.check_descent) {
        if (!measure_less(a, w.run, r, n)) throw WitnessError("run measure did not decrease under rule " + rule.name);
        if (opt.descent_checks) ++*opt.descent_checks;
      }
      check_run(r, c);
      if (tree.nodes.size() >= opt.max_nodes) throw WitnessError("witness tree exceeds the node limit");
      const int id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(WitnessNode{Configuration{c, project(r)}, -1, {}, {}});
      tree.nodes[static_cast<std::size_t>(w.node)].children.push_back(id);
      work.push_back(Work{id, std::move(r), c});
    }
  }
  return tree;
}

// Witness for a configuration accepted by a saturated automaton.
inline WitnessTree extract_witness(const Cpds& m, const StackAutomaton& a, const Configuration& c, const WitnessOptions& opt = {}) {
  auto run = build_initial_run(a, c);
  if (!run) throw WitnessError("configuration " + m.config_string(c) + " is not accepted");
  return get_witness(m, a, *run, c.control, opt);
}

// Acceptance of a configuration by an automaton whose control states are
// found by the model's control names.
inline bool accepts_named(const StackAutomaton& a, const Cpds& m, const Configuration& c) {
  StateId q = a.control_state(c.control);
  if (q < 0) q = a.find_state(m.control_name(c.control));
  if (q < 0 || a.state(q).order != m.order) return false;
  return a.accepts(c.stack, q);
}

// Replays every edge of a witness tree with the model's rules (looked up by
// name) and checks each leaf against A0.  On failure, `why` describes the
// first problem found.
inline bool validate_witness(const WitnessTree& tree, const Cpds& m, const StackAutomaton& a0, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (tree.nodes.empty()) return fail("empty tree");
  for (const WitnessNode& node : tree.nodes) {
    const Configuration& c = node.config;
    if (node.children.empty()) {
      if (node.rule >= 0) return fail("leaf carries a rule");
      if (!accepts_named(a0, m, c)) return fail("leaf " + m.config_string(c) + " is not in the target language");
      continue;
    }
    auto it = std::find_if(m.rules.begin(), m.rules.end(), [&](const Rule& r) { return r.name == node.rule_name; });
    if (it == m.rules.end()) return fail("unknown rule " + node.rule_name);
    const Rule& r = *it;
    if (r.from != c.control) return fail("rule " + r.name + " does not start at " + m.control_name(c.control));
    auto top = top_char(c.stack);
    if (!top) return fail("configuration without a top character");
    if (r.alternating) {
      for (Control p : r.targets) {
        bool found = false;
        for (int ch : node.children) {
          const Configuration& cc = tree.nodes[static_cast<std::size_t>(ch)].config;
          if (cc.control == p && cc.stack == c.stack) found = true;
        }
        if (!found) return fail("alternating rule " + r.name + " misses branch " + m.control_name(p));
      }
      for (int ch : node.children) {
        const Configuration& cc = tree.nodes[static_cast<std::size_t>(ch)].config;
        if (!std::binary_search(r.targets.begin(), r.targets.end(), cc.control) || cc.stack != c.stack)
          return fail("alternating rule " + r.name + " has an unexpected child");
      }
      continue;
    }
    if (node.children.size() != 1) return fail("ordinary rule with several children");
    if (top->label() != r.symbol) return fail("rule " + r.name + " does not read the top character");
    auto succ = apply_operation(r.op, c.stack);
    const Configuration& cc = tree.nodes[static_cast<std::size_t>(node.children.front())].config;
    if (!succ || cc.control != r.to || cc.stack != *succ)
      return fail("rule " + r.name + " does not lead from " + m.config_string(c) + " to " + m.config_string(cc));
  }
  return true;
}

}  // namespace cpds
