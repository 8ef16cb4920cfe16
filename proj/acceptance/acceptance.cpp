#include <CLI11.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpds/fast.hpp"
#include "cpds/forward.hpp"
#include "cpds/io.hpp"
#include "cpds/oracle.hpp"
#include "cpds/pipeline.hpp"
#include "cpds/saturation.hpp"
#include "cpds/witness.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;
using cpds::testing::long_forms;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string failure;  // first counterexample, if any

  void fail(const std::string& why) {
    if (pass) failure = why;
    pass = false;
  }
};

struct Settings {
  std::uint32_t seed = 20240601;
  int suite_size = 500;
  int depth = 8;
  std::size_t stack_cap = 12;
  int seeds_per_instance = 6;
  double instance_budget = 3.0;
};

std::string model_text(const Cpds& m) { return model_to_string(ModelFile{m, {}, {}}); }

// ---------------------------------------------------------------------------
// Criterion 1: the worked example.

Outcome golden() {
  Outcome o;
  const auto start = Clock::now();
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult naive = saturate_naive(mf.model, a0);
  SaturationResult fast = saturate_fast(mf.model, a0);
  const std::set<std::string> initial = long_forms(a0, mf.model);
  const std::set<std::string> expected = {
      "q4 -- c / {} --> ({};{q5})",
      "q3 -- a / {q4} --> ({};{})",
      "q2 -- a / {q4} --> ({};{})",
      "q1 -- b / {} --> ({};{q4})",
  };
  for (const SaturationResult* r : {&naive, &fast}) {
    std::set<std::string> added;
    for (const std::string& s : long_forms(r->automaton, mf.model))
      if (!initial.count(s)) added.insert(s);
    if (added != expected) o.fail("added transitions differ from the four expected ones");
  }
  const std::vector<std::pair<std::string, std::string>> run = {
      {"q1", "[[b][c][d]]"},
      {"q2", "[[a^(2,2) b][c][d]]"},
      {"q3", "[[a^(2,2) b][a^(2,2) b][c][d]]"},
      {"q4", "[[c][d]]"},
      {"q5", "[[d]]"},
  };
  int accepted = 0;
  for (const auto& [p, w] : run) {
    if (accepts_config(naive, cpds::testing::config(mf, p, w)) && accepts_config(fast, cpds::testing::config(mf, p, w)))
      ++accepted;
    else
      o.fail("run configuration <" + p + ", " + w + "> not accepted");
  }
  WitnessOptions wo;
  wo.check_descent = true;
  wo.check_runs = true;
  WitnessTree tree = extract_witness(mf.model, naive.automaton, *mf.init, wo);
  const std::vector<std::string> seq = tree.rule_sequence();
  const bool seq_ok = tree.linear() && seq == std::vector<std::string>{"r1", "r2", "r3", "r4"};
  if (!seq_ok) o.fail("witness rule sequence is not r1 r2 r3 r4");
  std::string why;
  if (!validate_witness(tree, mf.model, a0, &why)) o.fail("witness does not replay: " + why);
  const double t = seconds_since(start);
  if (t >= 1.0) o.fail("took " + std::to_string(t) + " s");
  std::ostringstream os;
  os << "4 added transitions, " << accepted << "/5 run configurations accepted, witness";
  for (const auto& s : seq) os << ' ' << s;
  os << ", " << static_cast<int>(t * 1000) << " ms";
  o.detail = os.str();
  return o;
}

// ---------------------------------------------------------------------------
// Criteria 2, 3 and 5: the random suite.

struct SuiteResult {
  Outcome completeness;
  Outcome witnesses;
  Outcome forward;
};

Configuration random_seed(std::mt19937& rng, const Cpds& m) {
  return Configuration{cpds::testing::uniform(rng, 0, m.num_controls() - 1),
                       cpds::testing::random_stack(rng, m.order, m.num_symbols(), cpds::testing::uniform(rng, 0, 4),
                                                   cpds::testing::link_orders_of(m))};
}

SuiteResult random_suite(const Settings& s) {
  SuiteResult r;
  std::mt19937 rng(s.seed);
  const auto start = Clock::now();
  int instances = 0, attempts = 0, skipped = 0;
  long proved = 0, accepted_seeds = 0, witnesses = 0, witness_skipped = 0;
  std::size_t descents = 0;
  long forward_compared = 0, forward_reachable = 0, forward_skipped = 0, subset_checked = 0, subset_skipped = 0;
  long rules_before = 0, rules_after = 0;

  while (instances < s.suite_size && attempts < s.suite_size * 3) {
    ++attempts;
    Cpds m = cpds::testing::random_model(rng, {});
    cpds::testing::AutomatonParams ap;
    ap.transitions = cpds::testing::uniform(rng, 2, 6);
    StackAutomaton a0 = cpds::testing::random_automaton(rng, m, ap);
    std::vector<Configuration> seeds;
    for (int i = 0; i < s.seeds_per_instance; ++i) seeds.push_back(random_seed(rng, m));

    Deadline budget(s.instance_budget);
    SaturationOptions so;
    so.deadline = &budget;
    std::optional<SaturationResult> fast, naive;
    try {
      fast = saturate_fast(m, a0, so);
      naive = saturate_naive(m, a0, so);
    } catch (const TimeoutError&) {
      ++skipped;
      continue;
    }
    ++instances;

    // Completeness against the bounded AND-OR oracle.
    OracleOptions oo;
    oo.stack_cap = s.stack_cap;
    LanguageOracle oracle(m, a0, oo);
    for (const Configuration& c : seeds) {
      const bool yes = oracle.reaches(c, s.depth) == OracleVerdict::Yes;
      const bool by_fast = accepts_config(*fast, c);
      const bool by_naive = accepts_config(*naive, c);
      if (yes) {
        ++proved;
        if (!by_fast || !by_naive)
          r.completeness.fail("seed " + m.config_string(c) + " reaches L(A0) but is rejected\n" + model_text(m) +
                              automaton_to_string(a0, m));
      }
      if (by_fast != by_naive) r.completeness.fail("engines disagree on " + m.config_string(c) + "\n" + model_text(m));

      // Witness soundness for every accepted seed.
      if (!by_fast) continue;
      ++accepted_seeds;
      WitnessOptions wo;
      wo.check_descent = true;
      wo.check_runs = true;
      Deadline wbudget(s.instance_budget);
      wo.deadline = &wbudget;
      wo.descent_checks = &descents;
      try {
        WitnessTree tree = extract_witness(m, fast->automaton, c, wo);
        std::string why;
        if (!validate_witness(tree, m, a0, &why))
          r.witnesses.fail("witness for " + m.config_string(c) + " does not replay: " + why + "\n" + model_text(m));
        ++witnesses;
      } catch (const TimeoutError&) {
        ++witness_skipped;
      } catch (const std::exception& e) {
        r.witnesses.fail("witness for " + m.config_string(c) + ": " + e.what() + "\n" + model_text(m));
      }
    }

    // Forward-phase preservation on the reachability question for the last
    // control from the first seed.
    ModelFile mf{m, seeds.front(), {m.num_controls() - 1}};
    std::vector<VerdictKind> kinds;
    for (ForwardMode f : {ForwardMode::On, ForwardMode::Prune, ForwardMode::Off}) {
      PipelineConfig cfg;
      cfg.forward = f;
      cfg.timeout_seconds = s.instance_budget;
      Verdict v = run_pipeline(mf, cfg);
      if (v.kind == VerdictKind::Inconclusive && v.message != "timeout")
        r.forward.fail("pipeline error: " + v.message + "\n" + model_to_string(mf));
      kinds.push_back(v.kind);
      if (f == ForwardMode::On && v.kind != VerdictKind::Inconclusive) {
        rules_before += m.num_rules();
        rules_after += static_cast<long>(v.rules_kept);
      }
    }
    if (std::find(kinds.begin(), kinds.end(), VerdictKind::Inconclusive) != kinds.end()) {
      ++forward_skipped;
    } else {
      ++forward_compared;
      forward_reachable += kinds[0] == VerdictKind::Reachable;
      if (kinds[0] != kinds[1] || kinds[1] != kinds[2])
        r.forward.fail(std::string("verdicts differ: on=") + verdict_name(kinds[0]) + " prune=" + verdict_name(kinds[1]) +
                       " off=" + verdict_name(kinds[2]) + "\n" + model_to_string(mf));
    }

    // Guarded saturation is contained in the saturation of the trivialisation,
    // both for the guards extracted by the forward phase and for random guards.
    std::vector<Cpds> guarded;
    ApproxGraph g = build_graph(m, seeds.front());
    guarded.push_back(extract_guarded(m, g, back_rules(g, mf.targets), {seeds.front().stack}));
    Cpds randomly = m;
    for (Rule& rule : randomly.rules)
      if (!rule.alternating && (rule.op.kind == OpKind::Pop || rule.op.kind == OpKind::Collapse) &&
          cpds::testing::chance(rng, 0.5)) {
        std::vector<Symbol> gs;
        for (Symbol b = 0; b < m.num_symbols(); ++b)
          if (cpds::testing::chance(rng, 0.5)) gs.push_back(b);
        rule.op.guard = gs;
      }
    guarded.push_back(randomly);
    for (const Cpds& gm : guarded) {
      Deadline gbudget(s.instance_budget);
      SaturationOptions gso;
      gso.deadline = &gbudget;
      try {
        const std::set<std::string> narrow = long_forms(saturate_fast(gm, a0, gso).automaton, gm);
        const std::set<std::string> wide = long_forms(saturate_fast(trivialise(gm), a0, gso).automaton, gm);
        ++subset_checked;
        for (const std::string& t : narrow)
          if (!wide.count(t)) {
            r.forward.fail("guarded transition " + t + " missing from the trivialised saturation\n" + model_text(gm));
            break;
          }
      } catch (const TimeoutError&) {
        ++subset_skipped;
      }
    }
  }

  const double t = seconds_since(start);
  if (instances < s.suite_size) r.completeness.fail("only " + std::to_string(instances) + " instances completed");
  if (t >= 300) r.completeness.fail("suite took " + std::to_string(t) + " s");
  if (proved == 0) r.completeness.fail("the oracle proved no seed");
  if (witnesses == 0) r.witnesses.fail("no witness extracted");
  if (forward_compared < s.suite_size * 9 / 10) r.forward.fail("too few instances compared across forward settings");

  std::ostringstream c2, c3, c5;
  c2 << instances << " instances (" << skipped << " skipped after a " << s.instance_budget << " s saturation budget), "
     << proved << " seeds proved by the oracle at depth " << s.depth << ", all accepted by both engines, "
     << static_cast<int>(t) << " s";
  c3 << witnesses << " witnesses from " << accepted_seeds << " accepted seeds replayed, " << descents
     << " descent steps checked, " << witness_skipped << " extractions over budget";
  c5 << forward_compared << " verdicts equal across on/prune/off (" << forward_reachable << " reachable, " << forward_skipped
     << " timed out), "
     << subset_checked << " guarded saturations contained in their trivialisation (" << subset_skipped
     << " timed out), forward phase kept " << rules_after << "/" << rules_before << " rules";
  r.completeness.detail = c2.str();
  r.witnesses.detail = c3.str();
  r.forward.detail = c5.str();
  return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: engine equivalence.

Outcome engines(const Settings& s) {
  Outcome o;
  std::mt19937 rng(s.seed + 4);
  int compared = 0, skipped = 0;
  long transitions = 0;
  while (compared < 100 && compared + skipped < 300) {
    Cpds m = cpds::testing::random_model(rng, {});
    StackAutomaton a0 = cpds::testing::random_automaton(rng, m, {});
    Deadline budget(s.instance_budget);
    SaturationOptions so;
    so.deadline = &budget;
    try {
      const auto naive = long_forms(saturate_naive(m, a0, so).automaton, m);
      const auto fast = long_forms(saturate_fast(m, a0, so).automaton, m);
      ++compared;
      transitions += static_cast<long>(naive.size());
      if (naive != fast) o.fail("transition sets differ\n" + model_text(m) + automaton_to_string(a0, m));
    } catch (const TimeoutError&) {
      ++skipped;
    }
  }
  if (compared < 100) o.fail("only " + std::to_string(compared) + " instances completed");
  o.detail = std::to_string(compared) + " instances with identical long-form sets (" + std::to_string(transitions) +
             " transitions, " + std::to_string(skipped) + " skipped)";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: membership and emptiness against exhaustive enumeration.

Outcome membership(const Settings& s) {
  Outcome o;
  std::mt19937 rng(s.seed + 6);
  long stacks = 0, members = 0;
  for (int i = 0; i < 50; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    cpds::testing::AutomatonParams ap;
    ap.transitions = 10;
    ap.branch_prob = 0.5;
    StackAutomaton a = cpds::testing::random_automaton(rng, m, ap);
    const std::vector<bool> nonempty = a.nonempty_states();
    cpds::testing::enumerate_stacks(m.order, m.num_symbols(), 6, cpds::testing::link_orders_of(m), [&](const Stack& w) {
      ++stacks;
      WordGraph<Stack> g(w);
      const StateSet lab = a.label(g)[static_cast<std::size_t>(g.root())];
      if (lab != run_accepting_states(a, w)) o.fail("membership disagrees on " + m.stack_string(w) + "\n" + automaton_to_string(a, m));
      for (StateId q : lab) {
        ++members;
        if (!nonempty[static_cast<std::size_t>(q)])
          o.fail("state " + a.state_name(q) + " is empty by fixpoint but accepts " + m.stack_string(w));
      }
    });
  }
  o.detail = "50 automata, " + std::to_string(stacks) + " stacks of at most 6 nodes, " + std::to_string(members) +
             " accepted (state, stack) pairs, all consistent with the emptiness fixpoint";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 7: non-alternating mode.

Outcome nonalternating(const Settings& s) {
  Outcome o;
  std::mt19937 rng(s.seed + 7);
  cpds::testing::ModelParams mp;
  mp.alt_fraction = 0;
  cpds::testing::AutomatonParams ap;
  ap.nonalternating = true;
  int compared = 0, skipped = 0;
  long configurations = 0;
  while (compared < 100 && compared + skipped < 300) {
    Cpds m = cpds::testing::random_model(rng, mp);
    StackAutomaton a0 = cpds::testing::random_automaton(rng, m, ap);
    Deadline budget(s.instance_budget);
    SaturationOptions full, restricted;
    full.deadline = restricted.deadline = &budget;
    restricted.mode = SatMode::NonAlternating;
    try {
      SaturationResult rf = saturate_fast(m, a0, full);
      SaturationResult rn = saturate_fast(m, a0, restricted);
      SaturationResult rn_naive = saturate_naive(m, a0, restricted);
      ++compared;
      if (max_top_target(rn.automaton) > 1 || max_top_target(rn_naive.automaton) > 1)
        o.fail("non-alternating mode emitted an order-n target set with more than one state\n" + model_text(m));
      cpds::testing::enumerate_stacks(m.order, m.num_symbols(), 5, cpds::testing::link_orders_of(m), [&](const Stack& w) {
        if (!top_char(w)) return;
        for (Control c = 0; c < m.num_controls(); ++c) {
          ++configurations;
          const Configuration cfg{c, w};
          if (accepts_config(rf, cfg) != accepts_config(rn, cfg) || accepts_config(rn, cfg) != accepts_config(rn_naive, cfg))
            o.fail("modes disagree on " + m.config_string(cfg) + "\n" + model_text(m) + automaton_to_string(a0, m));
        }
      });
    } catch (const TimeoutError&) {
      ++skipped;
    }
  }
  if (compared < 100) o.fail("only " + std::to_string(compared) + " instances completed");
  o.detail = std::to_string(compared) + " instances, " + std::to_string(configurations) +
             " configurations with identical acceptance, no order-n target set above one state (" +
             std::to_string(skipped) + " skipped)";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 8: stack laws.

Outcome stack_laws(const Settings& s) {
  Outcome o;
  std::mt19937 rng(s.seed + 8);
  int checked = 0;
  while (checked < 10000) {
    const int n = cpds::testing::uniform(rng, 1, 4);
    const int symbols = cpds::testing::uniform(rng, 1, 3);
    Stack w = cpds::testing::random_stack(rng, n, symbols, cpds::testing::uniform(rng, 0, 12));
    auto r = cpds::testing::check_stack_laws(rng, w, symbols);
    checked += r.checked;
    if (!r.ok) o.fail(r.message);
  }
  o.detail = std::to_string(checked) + " law applications";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite for the reachability checker"};
  Settings s;
  std::vector<int> only;
  app.add_option("--seed", s.seed, "Random seed");
  app.add_option("--suite-size", s.suite_size, "Number of random instances for criteria 2, 3 and 5");
  app.add_option("--budget", s.instance_budget, "Per-instance time budget in seconds");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
  bool all = true;
  auto report = [&](int k, const std::string& name, const Outcome& o) {
    std::cout << "criterion " << k << " (" << name << "): " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << '\n';
    if (!o.pass) std::cout << "  first failure: " << o.failure << '\n';
    std::cout.flush();
    all = all && o.pass;
  };
  auto guarded = [&](int k, const std::string& name, const std::function<Outcome()>& f) {
    if (!wanted(k)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    report(k, name, o);
  };

  guarded(1, "worked example", golden);
  if (wanted(2) || wanted(3) || wanted(5)) {
    SuiteResult r;
    try {
      r = random_suite(s);
    } catch (const std::exception& e) {
      r.completeness.fail(std::string("exception: ") + e.what());
      r.witnesses.fail("suite aborted");
      r.forward.fail("suite aborted");
    }
    if (wanted(2)) report(2, "oracle completeness", r.completeness);
    if (wanted(3)) report(3, "witness soundness", r.witnesses);
    if (wanted(5)) report(5, "forward-phase preservation", r.forward);
  }
  guarded(4, "engine equivalence", [&] { return engines(s); });
  guarded(6, "membership and emptiness", [&] { return membership(s); });
  guarded(7, "non-alternation", [&] { return nonalternating(s); });
  guarded(8, "stack laws", [&] { return stack_laws(s); });
  return all ? 0 : 1;
}
