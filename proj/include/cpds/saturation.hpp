#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/deadline.hpp"
#include "cpds/model.hpp"

namespace cpds {

enum class SatMode { Full, NonAlternating };

struct SaturationOptions {
  SatMode mode = SatMode::Full;
  const Deadline* deadline = nullptr;
  std::ostream* trace = nullptr;
};

struct SaturationResult {
  StackAutomaton automaton{1, 1};
  std::size_t iterations = 0;
  std::size_t initial_transitions = 0;
};

// Copies A0 and adds a (possibly empty) state q_p for every control of the
// model, then checks the initial-state conventions.
inline StackAutomaton prepare_initial(const Cpds& m, const StackAutomaton& a0) {
  if (a0.order() != m.order) throw AutomatonError("automaton order differs from the model order");
  if (a0.num_symbols() != m.num_symbols()) throw AutomatonError("automaton alphabet differs from the model alphabet");
  StackAutomaton a = a0;
  for (Control c = 0; c < m.num_controls(); ++c) a.ensure_control_state(c, m.control_name(c));
  if (auto err = a.check_initial_conventions()) throw AutomatonError(*err);
  for (TransId t = 0; t < a.num_transitions(); ++t) a.set_justification(t, Justification{});
  return a;
}

// Syntactic non-alternation of an automaton: no order-n transition has a target
// set with more than one state and no order-n branch set has more than one state.
inline bool is_nonalternating_automaton(const StackAutomaton& a) {
  const int n = a.order();
  for (StateId q = 0; q < a.num_states(); ++q) {
    if (a.state(q).order != n) continue;
    for (const auto& [set, mid] : a.children_of(q))
      if (set.size() > 1) return false;
    if (n == 1) {
      for (Symbol s = 0; s < a.num_symbols(); ++s)
        for (TransId t : a.transitions_from(q, s))
          if (a.transition(t).target.size() > 1) return false;
    }
  }
  for (TransId t = 0; t < a.num_transitions(); ++t) {
    const auto& br = a.transition(t).branch;
    if (!br.empty() && a.state(br.front()).order == n && br.size() > 1) return false;
  }
  return true;
}

// Largest order-n target set among the automaton's long forms.
inline std::size_t max_top_target(const StackAutomaton& a) {
  std::size_t best = 0;
  for (TransId t = 0; t < a.num_transitions(); ++t) {
    LongForm lf = a.long_form(t);
    if (a.state(lf.source).order == a.order()) best = std::max(best, lf.targets.back().size());
  }
  return best;
}

// Renders q --(a, Q_br)--> (Q_1;...;Q_k) using canonical state names.
inline std::string long_form_string_plain(const StackAutomaton& a, const Cpds& m, const LongForm& lf) {
  std::string s = a.state_name(lf.source) + " -- " + m.symbol_name(lf.symbol) + " / " + a.set_name(lf.branch) + " --> (";
  for (std::size_t j = 0; j < lf.targets.size(); ++j) s += (j ? ";" : "") + a.set_name(lf.targets[j]);
  return s + ")";
}

namespace detail {

inline std::vector<StateSet> empty_targets(int n) { return std::vector<StateSet>(static_cast<std::size_t>(n)); }

inline bool guard_allows(const StackAutomaton& a, const Operation& op, StateId q) {
  if (!op.guard) return true;
  for (Symbol b : *op.guard)
    if (a.reads(q, b)) return true;
  return false;
}

}  // namespace detail

// One application of the saturation function: every long-form transition the
// rules justify from the current automaton, tagged with the given step.
inline std::vector<std::pair<LongForm, Justification>> saturation_candidates(const Cpds& m, const StackAutomaton& a,
                                                                              SatMode mode, std::uint64_t step,
                                                                              const Deadline* deadline = nullptr) {
  const int n = m.order;
  std::vector<std::pair<LongForm, Justification>> pending;
  std::uint64_t ticks = 0;
  auto emit = [&](LongForm lf, Justification j) {
    if (deadline && (++ticks & 0xfff) == 0) deadline->check();
    if (mode == SatMode::NonAlternating && lf.targets.back().size() > 1) return;
    j.step = step;
    pending.emplace_back(std::move(lf), std::move(j));
  };

  for (RuleId r = 0; r < m.num_rules(); ++r) {
    const Rule& rule = m.rules[static_cast<std::size_t>(r)];
    const StateId qp = a.control_state(rule.from);
    if (rule.alternating) {
      StateSet s;
      for (Control c : rule.targets) s.push_back(a.control_state(c));
      normalize(s);
      for (Symbol sym = 0; sym < m.num_symbols(); ++sym)
        for (Lifted& l : a.lifted(s, sym, n, deadline))
          emit(LongForm{qp, sym, l.branch, l.targets}, Justification{JustKind::RuleSet, r, -1, l.chosen, 0});
      continue;
    }
    const StateId qt = a.control_state(rule.to);
    const Symbol sym = rule.symbol;
    const Operation& op = rule.op;
    const int k = op.order;
    switch (op.kind) {
      case OpKind::Pop: {
        for (const Chain& c : a.chains(qt, k)) {
          if (!detail::guard_allows(a, op, c.state)) continue;
          auto targets = detail::empty_targets(n);
          targets[static_cast<std::size_t>(k - 1)] = {c.state};
          for (std::size_t j = 0; j < c.upper.size(); ++j) targets[static_cast<std::size_t>(k) + j] = c.upper[j];
          emit(LongForm{qp, sym, {}, targets}, Justification{JustKind::Rule, r, -1, {}, 0});
        }
        break;
      }
      case OpKind::Collapse: {
        for (const Chain& c : a.chains(qt, k)) {
          if (!detail::guard_allows(a, op, c.state)) continue;
          auto targets = detail::empty_targets(n);
          for (std::size_t j = 0; j < c.upper.size(); ++j) targets[static_cast<std::size_t>(k) + j] = c.upper[j];
          emit(LongForm{qp, sym, {c.state}, targets}, Justification{JustKind::Rule, r, -1, {}, 0});
        }
        break;
      }
      case OpKind::Push: {
        for (const auto& [t, lf] : a.long_forms_from(qt, sym)) {
          for (Lifted& l : a.lifted(lf.targets[static_cast<std::size_t>(k - 1)], sym, k, deadline)) {
            StateSet br = set_union(lf.branch, l.branch);
            if (a.branch_order(br) < 0) continue;
            auto targets = lf.targets;
            for (int j = 0; j < k - 1; ++j)
              targets[static_cast<std::size_t>(j)] = set_union(lf.targets[static_cast<std::size_t>(j)], l.targets[static_cast<std::size_t>(j)]);
            targets[static_cast<std::size_t>(k - 1)] = l.targets[static_cast<std::size_t>(k - 1)];
            emit(LongForm{qp, sym, br, targets}, Justification{JustKind::RuleTransSet, r, t, l.chosen, 0});
          }
        }
        break;
      }
      case OpKind::PushChar: {
        for (const auto& [t, lf] : a.long_forms_from(qt, op.symbol)) {
          const int bo = a.branch_order(lf.branch);
          if (bo != 0 && bo != k) continue;
          for (Lifted& l : a.lifted(lf.targets[0], sym, 1, deadline)) {
            auto targets = lf.targets;
            targets[0] = l.targets[0];
            targets[static_cast<std::size_t>(k - 1)] = set_union(targets[static_cast<std::size_t>(k - 1)], lf.branch);
            emit(LongForm{qp, sym, l.branch, targets}, Justification{JustKind::RuleTransSet, r, t, l.chosen, 0});
          }
        }
        break;
      }
      case OpKind::Rew: {
        for (const auto& [t, lf] : a.long_forms_from(qt, op.symbol))
          emit(LongForm{qp, sym, lf.branch, lf.targets}, Justification{JustKind::RuleTrans, r, t, {}, 0});
        break;
      }
    }
  }
  return pending;
}

// True when one more application of the saturation function adds nothing.
inline bool is_saturated(const Cpds& m, const StackAutomaton& a, SatMode mode = SatMode::Full) {
  for (const auto& [lf, j] : saturation_candidates(m, a, mode, 0))
    if (!a.find_long(lf)) return false;
  return true;
}

// Saturation by repeated application of the saturation function until a
// fixpoint.  Each step reads the automaton of the previous step only.
inline SaturationResult saturate_naive(const Cpds& m, const StackAutomaton& a0, const SaturationOptions& opt = {}) {
  m.validate();
  SaturationResult res;
  res.automaton = prepare_initial(m, a0);
  StackAutomaton& a = res.automaton;
  res.initial_transitions = static_cast<std::size_t>(a.num_transitions());
  std::uint64_t step = 0;

  while (true) {
    if (opt.deadline) opt.deadline->check();
    ++step;
    auto pending = saturation_candidates(m, a, opt.mode, step, opt.deadline);
    std::size_t added = 0;
    for (auto& [lf, j] : pending) {
      if (a.find_long(lf)) continue;
      auto res_add = a.add_long(lf, j);
      if (res_add.added) {
        ++added;
        if (opt.trace)
          *opt.trace << "step " << step << " add " << long_form_string_plain(a, m, lf) << " by "
                     << m.rules[static_cast<std::size_t>(j.rule)].name << '\n';
      }
    }
    if (added == 0) break;
    res.iterations = static_cast<std::size_t>(step);
  }
  return res;
}

// Membership of a configuration in the language of the saturated automaton.
inline bool accepts_config(const StackAutomaton& a, const Configuration& c) {
  const StateId q = a.control_state(c.control);
  if (q < 0) throw AutomatonError("unknown control state");
  return a.accepts(c.stack, q);
}

inline bool accepts_config(const SaturationResult& r, const Configuration& c) { return accepts_config(r.automaton, c); }

}  // namespace cpds
