#pragma once

#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/fast.hpp"
#include "cpds/forward.hpp"
#include "cpds/io.hpp"
#include "cpds/model.hpp"
#include "cpds/saturation.hpp"
#include "cpds/witness.hpp"

namespace cpds {

// A0 accepting every stack with a top character from the control state of each
// target control.  Shared states U_1..U_n accept every stack whose lists are
// non-empty; they are final so the remainder below the top may be empty.
inline StackAutomaton universal_automaton(const Cpds& m, const std::vector<Control>& targets) {
  const int n = m.order;
  StackAutomaton a(n, m.num_symbols());
  for (Control c = 0; c < m.num_controls(); ++c) a.ensure_control_state(c, m.control_name(c));
  std::vector<StateId> u(static_cast<std::size_t>(n) + 1, -1);
  for (int k = 1; k <= n; ++k) {
    u[static_cast<std::size_t>(k)] = a.add_state(k, "U" + std::to_string(k));
    a.set_final(u[static_cast<std::size_t>(k)]);
  }
  auto everything = [&](StateId from, int k) {
    for (Symbol s = 0; s < m.num_symbols(); ++s) {
      LongForm lf{from, s, {}, {}};
      for (int j = 1; j <= k; ++j) lf.targets.push_back({u[static_cast<std::size_t>(j)]});
      a.add_long(lf, Justification{});
    }
  };
  for (int k = 1; k <= n; ++k) everything(u[static_cast<std::size_t>(k)], k);
  for (Control c : targets) everything(a.control_state(c), n);
  return a;
}

enum class Engine { Fast, Naive };
enum class ForwardMode { On, Prune, Off };

struct PipelineConfig {
  Engine engine = Engine::Fast;
  ForwardMode forward = ForwardMode::On;
  SatMode mode = SatMode::Full;
  double timeout_seconds = 0;  // 0 means no limit
  std::optional<StackAutomaton> automaton;  // explicit A0; otherwise the targets' universal automaton
  std::ostream* trace = nullptr;
  std::ostream* graph_dump = nullptr;
  WitnessOptions witness;
};

enum class VerdictKind { Unreachable, Reachable, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::string message;
  WitnessTree witness;
  std::optional<StackAutomaton> saturated;
  Cpds saturated_model;  // the (possibly pruned and guarded) model that was saturated
  std::size_t graph_heads = 0;
  std::size_t graph_edges = 0;
  std::size_t rules_kept = 0;
  std::size_t transitions = 0;

  int exit_code() const { return kind == VerdictKind::Unreachable ? 0 : kind == VerdictKind::Reachable ? 1 : 2; }
};

inline const char* verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Unreachable: return "unreachable";
    case VerdictKind::Reachable: return "reachable";
    case VerdictKind::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace detail {

// Controls whose A0 state accepts some stack.
inline std::vector<Control> live_controls(const Cpds& m, const StackAutomaton& a0) {
  std::vector<Control> out;
  auto nonempty = a0.nonempty_states();
  for (Control c = 0; c < m.num_controls(); ++c) {
    StateId q = a0.control_state(c);
    if (q < 0) q = a0.find_state(m.control_name(c));
    if (q >= 0 && nonempty[static_cast<std::size_t>(q)]) out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline Verdict run_pipeline(const ModelFile& mf, const PipelineConfig& cfg) {
  Verdict v;
  const Cpds& m = mf.model;
  try {
    if (!mf.init) throw ModelError("model has no initial configuration");
    const Configuration& init = *mf.init;
    Deadline deadline(cfg.timeout_seconds);
    const StackAutomaton a0 = cfg.automaton ? *cfg.automaton : universal_automaton(m, mf.targets);
    if (cfg.mode == SatMode::NonAlternating && (m.has_alternation() || !is_nonalternating_automaton(a0)))
      throw ModelError("non-alternating mode needs a model and automaton without alternation");

    Cpds model = m;
    if (cfg.forward != ForwardMode::Off) {
      ForwardOptions fo;
      fo.deadline = &deadline;
      ApproxGraph g = build_graph(m, init, fo);
      if (cfg.graph_dump) g.dump(*cfg.graph_dump);
      const std::vector<Control> goals = cfg.automaton ? detail::live_controls(m, a0) : mf.targets;
      model = extract_guarded(m, g, back_rules(g, goals), {init.stack});
      if (cfg.forward == ForwardMode::Prune) model = trivialise(model);
      v.graph_heads = g.heads().size();
      v.graph_edges = g.edges().size();
    }
    v.rules_kept = static_cast<std::size_t>(model.num_rules());
    v.saturated_model = model;

    SaturationOptions so;
    so.mode = cfg.mode;
    so.deadline = &deadline;
    so.trace = cfg.trace;
    SaturationResult sat = cfg.engine == Engine::Fast ? saturate_fast(model, a0, so) : saturate_naive(model, a0, so);
    v.transitions = static_cast<std::size_t>(sat.automaton.num_transitions());

    if (!accepts_config(sat.automaton, init)) {
      v.kind = VerdictKind::Unreachable;
      v.saturated = std::move(sat.automaton);
      return v;
    }
    WitnessOptions wo = cfg.witness;
    wo.deadline = &deadline;
    v.witness = extract_witness(v.saturated_model, sat.automaton, init, wo);
    v.saturated = std::move(sat.automaton);
    std::string why;
    if (!validate_witness(v.witness, m, a0, &why)) {
      v.kind = VerdictKind::Inconclusive;
      v.message = "internal error: witness failed validation: " + why;
      return v;
    }
    v.kind = VerdictKind::Reachable;
  } catch (const TimeoutError&) {
    v.kind = VerdictKind::Inconclusive;
    v.message = "timeout";
  } catch (const std::exception& e) {
    v.kind = VerdictKind::Inconclusive;
    v.message = e.what();
  }
  return v;
}

}  // namespace cpds
