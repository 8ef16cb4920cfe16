#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpds/stack.hpp"

namespace cpds {

using Symbol = int;
using Control = int;
using RuleId = int;
using Stack = BasicStack<Symbol>;

enum class OpKind { Pop, Push, Collapse, PushChar, Rew };

struct Operation {
  OpKind kind = OpKind::Rew;
  int order = 0;                              // pop/push/collapse/push_char order
  Symbol symbol = -1;                         // push_char and rew symbol
  std::optional<std::vector<Symbol>> guard;   // sorted; pop and collapse only
  friend bool operator==(const Operation&, const Operation&) = default;
};

struct Rule {
  std::string name;
  bool alternating = false;
  Control from = -1;
  Symbol symbol = -1;             // ordinary rules only
  Operation op;                   // ordinary rules only
  Control to = -1;                // ordinary rules only
  std::vector<Control> targets;   // alternating rules only, sorted
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Configuration {
  Control control = -1;
  Stack stack;
  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.control == b.control && a.stack == b.stack;
  }
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const {
    return hash_mix(c.stack.hash(), static_cast<std::size_t>(c.control));
  }
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A (possibly guarded) alternating collapsible pushdown system.
class Cpds {
 public:
  int order = 1;
  std::vector<std::string> alphabet;
  std::vector<std::string> controls;
  std::vector<Rule> rules;
  std::map<Symbol, int> declared_link_order;

  Symbol symbol(const std::string& name) const {
    auto it = std::find(alphabet.begin(), alphabet.end(), name);
    return it == alphabet.end() ? -1 : static_cast<Symbol>(it - alphabet.begin());
  }
  Control control(const std::string& name) const {
    auto it = std::find(controls.begin(), controls.end(), name);
    return it == controls.end() ? -1 : static_cast<Control>(it - controls.begin());
  }
  Control add_control(const std::string& name) {
    Control c = control(name);
    if (c >= 0) return c;
    controls.push_back(name);
    return static_cast<Control>(controls.size() - 1);
  }
  int num_symbols() const { return static_cast<int>(alphabet.size()); }
  int num_controls() const { return static_cast<int>(controls.size()); }
  int num_rules() const { return static_cast<int>(rules.size()); }

  bool has_alternation() const {
    return std::any_of(rules.begin(), rules.end(), [](const Rule& r) { return r.alternating; });
  }
  bool is_guarded() const {
    return std::any_of(rules.begin(), rules.end(),
                       [](const Rule& r) { return !r.alternating && r.op.guard.has_value(); });
  }

  RuleId add_rule(Rule r) {
    if (r.name.empty()) r.name = "r" + std::to_string(rules.size() + 1);
    if (r.alternating) {
      std::sort(r.targets.begin(), r.targets.end());
      r.targets.erase(std::unique(r.targets.begin(), r.targets.end()), r.targets.end());
    } else if (r.op.guard) {
      auto& g = *r.op.guard;
      std::sort(g.begin(), g.end());
      g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    rules.push_back(std::move(r));
    return static_cast<RuleId>(rules.size() - 1);
  }

  std::string symbol_name(Symbol s) const {
    return s >= 0 && s < num_symbols() ? alphabet[static_cast<std::size_t>(s)] : "?";
  }
  std::string control_name(Control c) const {
    return c >= 0 && c < num_controls() ? controls[static_cast<std::size_t>(c)] : "?";
  }

  std::string stack_string(const Stack& w) const {
    return stack_to_string(w, [this](std::ostream& os, Symbol s) { os << symbol_name(s); });
  }
  std::string config_string(const Configuration& c) const {
    return "<" + control_name(c.control) + ", " + stack_string(c.stack) + ">";
  }

  // Checks orders, symbol and control ranges, guard placement and the declared
  // link orders against push_b^k rules.  Throws ModelError.
  void validate() const {
    if (order < 1) throw ModelError("order must be at least 1");
    if (alphabet.empty()) throw ModelError("alphabet is empty");
    auto sym_ok = [&](Symbol s) { return s >= 0 && s < num_symbols(); };
    auto ctl_ok = [&](Control c) { return c >= 0 && c < num_controls(); };
    for (auto& [s, k] : declared_link_order) {
      if (!sym_ok(s)) throw ModelError("link order declared for unknown symbol");
      if (k < 1 || k > order) throw ModelError("declared link order of '" + symbol_name(s) + "' out of range");
    }
    for (const Rule& r : rules) {
      const std::string where = "rule " + r.name + ": ";
      if (!ctl_ok(r.from)) throw ModelError(where + "unknown source control");
      if (r.alternating) {
        if (r.targets.empty()) throw ModelError(where + "alternating rule with no targets");
        for (Control c : r.targets)
          if (!ctl_ok(c)) throw ModelError(where + "unknown target control");
        continue;
      }
      if (!ctl_ok(r.to)) throw ModelError(where + "unknown target control");
      if (!sym_ok(r.symbol)) throw ModelError(where + "unknown symbol");
      const Operation& op = r.op;
      switch (op.kind) {
        case OpKind::Pop:
          if (op.order < 1 || op.order > order) throw ModelError(where + "pop order out of range");
          break;
        case OpKind::Push:
          if (op.order < 2 || op.order > order) throw ModelError(where + "push order must be in [2, n]");
          break;
        case OpKind::Collapse:
          if (op.order < 2 || op.order > order) throw ModelError(where + "collapse order must be in [2, n]");
          break;
        case OpKind::PushChar: {
          if (op.order < 1 || op.order > order) throw ModelError(where + "push order out of range");
          if (!sym_ok(op.symbol)) throw ModelError(where + "unknown pushed symbol");
          auto it = declared_link_order.find(op.symbol);
          if (it != declared_link_order.end() && it->second != op.order)
            throw ModelError(where + "pushes '" + symbol_name(op.symbol) + "' with link order " +
                             std::to_string(op.order) + " but its declared link order is " +
                             std::to_string(it->second));
          break;
        }
        case OpKind::Rew:
          if (!sym_ok(op.symbol)) throw ModelError(where + "unknown rewrite symbol");
          break;
      }
      if (op.guard) {
        if (op.kind != OpKind::Pop && op.kind != OpKind::Collapse)
          throw ModelError(where + "only pop and collapse may carry a guard");
        for (Symbol s : *op.guard)
          if (!sym_ok(s)) throw ModelError(where + "unknown guard symbol");
      }
    }
  }

  // True when every symbol emits links of at most one order, counting the
  // push_b^k rules, the declared link orders and the given stacks.
  bool link_order_determined(const std::vector<Stack>& stacks = {}) const {
    std::map<Symbol, int> seen = declared_link_order;
    bool ok = true;
    auto note = [&](Symbol s, int k) {
      auto [it, inserted] = seen.emplace(s, k);
      if (!inserted && it->second != k) ok = false;
    };
    for (const Rule& r : rules)
      if (!r.alternating && r.op.kind == OpKind::PushChar) note(r.op.symbol, r.op.order);
    std::function<void(const Stack&)> walk = [&](const Stack& w) {
      if (w.is_char()) {
        if (w.link()) note(w.label(), w.link()->order);
        return;
      }
      for (const Stack& c : w.children()) walk(c);
    };
    for (const Stack& w : stacks) walk(w);
    return ok;
  }
};

// Applies an operation (respecting its guard) to a stack.
inline std::optional<Stack> apply_operation(const Operation& op, const Stack& w) {
  std::optional<Stack> out;
  switch (op.kind) {
    case OpKind::Pop: out = pop(w, op.order); break;
    case OpKind::Push: out = push(w, op.order); break;
    case OpKind::Collapse: out = collapse(w, op.order); break;
    case OpKind::PushChar: out = push_char(w, op.symbol, op.order); break;
    case OpKind::Rew: out = rew(w, op.symbol); break;
  }
  if (out && op.guard) {
    auto c = top_char(*out);
    if (!c || !std::binary_search(op.guard->begin(), op.guard->end(), c->label())) return std::nullopt;
  }
  return out;
}

struct Step {
  RuleId rule = -1;
  std::vector<Configuration> outcome;  // one configuration, or one per alternating target
};

// All single-step successors of a configuration.
inline std::vector<Step> successors(const Cpds& m, const Configuration& c) {
  std::vector<Step> out;
  auto top = top_char(c.stack);
  if (!top) return out;
  const Symbol a = top->label();
  for (RuleId id = 0; id < m.num_rules(); ++id) {
    const Rule& r = m.rules[static_cast<std::size_t>(id)];
    if (r.from != c.control) continue;
    if (r.alternating) {
      Step s{id, {}};
      for (Control p : r.targets) s.outcome.push_back(Configuration{p, c.stack});
      out.push_back(std::move(s));
      continue;
    }
    if (r.symbol != a) continue;
    if (auto w = apply_operation(r.op, c.stack)) out.push_back(Step{id, {Configuration{r.to, *w}}});
  }
  return out;
}

// Replaces every guarded operation by its unguarded version.
inline Cpds trivialise(const Cpds& m) {
  Cpds out = m;
  for (Rule& r : out.rules) r.op.guard.reset();
  return out;
}

}  // namespace cpds
