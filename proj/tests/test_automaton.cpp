#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cpds/automaton.hpp"
#include "cpds/io.hpp"
#include "cpds/saturation.hpp"
#include "cpds/witness.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;

struct Worked {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a = prepare_initial(mf.model, cpds::testing::worked_initial(mf.model));

  StateId q(const std::string& p) const { return a.control_state(mf.model.control(p)); }
  Symbol sym(const std::string& s) const { return mf.model.symbol(s); }
  Stack stack(const std::string& s) const { return parse_stack(s, mf.model, mf.model.order, true); }
};

TEST(AddLong, SecondAddIsANoOp) {
  Worked f;
  LongForm lf{f.q("q4"), f.sym("c"), {}, {{}, {f.q("q5")}}};
  AddResult first = f.a.add_long(lf, Justification{});
  EXPECT_TRUE(first.added);
  AddResult second = f.a.add_long(lf, Justification{});
  EXPECT_FALSE(second.added);
  EXPECT_TRUE(second.created.empty());
  EXPECT_EQ(second.id, first.id);
}

TEST(AddLong, NewTransitionCreatesOneShortFormPerOrder) {
  Worked f;
  LongForm lf{f.q("q1"), f.sym("b"), {}, {{}, {f.q("q4")}}};
  AddResult r = f.a.add_long(lf, Justification{});
  ASSERT_EQ(r.created.size(), 2u);
  EXPECT_EQ(r.created[0].order, 2);
  EXPECT_EQ(r.created[0].source, f.q("q1"));
  EXPECT_EQ(r.created[0].target, StateSet{f.q("q4")});
  EXPECT_EQ(r.created[1].order, 1);
  EXPECT_EQ(r.created[1].source, r.created[0].middle);
  EXPECT_EQ(f.a.long_form(r.id), lf);
}

TEST(AddLong, SharedUpperTargetsShareTheMiddleState) {
  Worked f;
  AddResult x = f.a.add_long(LongForm{f.q("q1"), f.sym("b"), {}, {{}, {f.q("q4")}}}, Justification{});
  AddResult y = f.a.add_long(LongForm{f.q("q1"), f.sym("c"), {}, {{}, {f.q("q4")}}}, Justification{});
  EXPECT_EQ(y.created.size(), 1u);
  EXPECT_EQ(f.a.transition(x.id).source, f.a.transition(y.id).source);
  const StateId mid = f.a.transition(x.id).source;
  EXPECT_EQ(f.a.state(mid).parent, f.q("q1"));
  EXPECT_EQ(f.a.state(mid).key, StateSet{f.q("q4")});
}

TEST(AddLong, RejectsBranchSetsSpanningOrders) {
  ModelFile mf = parse_model("order 3\nalphabet a\ncontrols p q r\n");
  StackAutomaton a(3, 1);
  for (Control c = 0; c < 3; ++c) a.ensure_control_state(c, mf.model.control_name(c));
  const StateId s2 = a.add_state(2, "s2");
  LongForm mixed{a.control_state(0), 0, make_set({a.control_state(1), s2}), {{}, {}, {}}};
  EXPECT_THROW(a.add_long(mixed, Justification{}), AutomatonError);
  LongForm wrong_arity{a.control_state(0), 0, {}, {{}, {}}};
  EXPECT_THROW(a.add_long(wrong_arity, Justification{}), AutomatonError);
}

TEST(ExtractShort, MirrorsAddLong) {
  Worked f;
  LongForm lf{f.q("q1"), f.sym("b"), {}, {{}, {f.q("q4")}}};
  std::vector<ShortForm> before = f.a.extract_short(lf);
  ASSERT_EQ(before.size(), 2u);
  EXPECT_EQ(before[0].middle, -1);
  EXPECT_EQ(before[1].id, -1);
  AddResult r = f.a.add_long(lf, Justification{});
  std::vector<ShortForm> after = f.a.extract_short(lf);
  ASSERT_EQ(after.size(), r.created.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].order, r.created[i].order);
    EXPECT_EQ(after[i].source, r.created[i].source);
    EXPECT_EQ(after[i].middle, r.created[i].middle);
    EXPECT_EQ(after[i].target, r.created[i].target);
    EXPECT_EQ(after[i].id, r.created[i].id);
  }
  std::vector<ShortForm> initial = f.a.extract_short(LongForm{f.q("q5"), f.sym("d"), {}, {{}, {}}});
  ASSERT_EQ(initial.size(), 2u);
  EXPECT_GE(initial[1].id, 0);
}

TEST(Membership, InitialRunAccepted) {
  Worked f;
  EXPECT_TRUE(f.a.accepts(f.stack("[[d]]"), f.q("q5")));
  EXPECT_FALSE(f.a.accepts(f.stack("[[c]]"), f.q("q5")));
  // Empty target sets accept any remainder.
  EXPECT_TRUE(f.a.accepts(f.stack("[[d c][b]]"), f.q("q5")));
}

TEST(Membership, EmptyRequirementAcceptsAnything) {
  Worked f;
  EXPECT_TRUE(f.a.accepts(f.stack("[[b][c][d]]"), StateSet{}));
  EXPECT_TRUE(f.a.accepts(f.stack("[[a]]"), StateSet{}));
}

TEST(Membership, SaturatedAutomatonAcceptsTheInitialConfiguration) {
  Worked f;
  SaturationResult r = saturate_naive(f.mf.model, f.a);
  EXPECT_TRUE(r.automaton.accepts(f.stack("[[b][c][d]]"), r.automaton.control_state(f.mf.model.control("q1"))));
}

TEST(Emptiness, StateWithoutTransitionsIsEmpty) {
  Worked f;
  EXPECT_FALSE(f.a.is_nonempty(f.q("q1")));
  EXPECT_TRUE(f.a.is_nonempty(f.q("q5")));
}

TEST(Emptiness, EmptyTargetsAreSatisfiedAtStackEnd) {
  StackAutomaton a(1, 1);
  const StateId q = a.add_state(1, "q");
  a.add_long(LongForm{q, 0, {}, {{}}}, Justification{});
  EXPECT_TRUE(a.is_nonempty(q));
}

TEST(Emptiness, SaturatedControlStatesAcceptSomeSmallStack) {
  Worked f;
  SaturationResult r = saturate_naive(f.mf.model, f.a);
  const StackAutomaton& sat = r.automaton;
  for (const std::string p : {"q1", "q2", "q3", "q4", "q5"}) {
    const StateId q = sat.control_state(f.mf.model.control(p));
    ASSERT_TRUE(sat.is_nonempty(q)) << p;
    bool found = false;
    cpds::testing::enumerate_stacks(2, f.mf.model.num_symbols(), 6, cpds::testing::link_orders_of(f.mf.model),
                                    [&](const Stack& w) { found = found || sat.accepts(w, q); });
    EXPECT_TRUE(found) << p;
  }
}

TEST(Lifting, EmptySetGivesOneEmptyTransition) {
  Worked f;
  std::vector<Lifted> l = f.a.lifted({}, f.sym("a"), 2);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_TRUE(l[0].branch.empty());
  EXPECT_EQ(l[0].targets, std::vector<StateSet>(2));
}

TEST(Lifting, SingleStateGivesItsTransitions) {
  Worked f;
  SaturationResult r = saturate_naive(f.mf.model, f.a);
  const StateId q3 = r.automaton.control_state(f.mf.model.control("q3"));
  std::vector<Lifted> l = r.automaton.lifted({q3}, f.sym("a"), 2);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].branch, StateSet{r.automaton.control_state(f.mf.model.control("q4"))});
  EXPECT_EQ(l[0].targets, std::vector<StateSet>(2));
}

TEST(Lifting, TwoStatesGiveTheDistinctUnionsOfAllChoices) {
  std::mt19937 rng(3);
  for (int round = 0; round < 40; ++round) {
    StackAutomaton a(2, 2);
    const StateId x = a.add_state(2, "x");
    const StateId y = a.add_state(2, "y");
    std::vector<StateId> pool1{a.add_state(1, "u"), a.add_state(1, "v")};
    std::vector<StateId> pool2{a.add_state(2, "s"), a.add_state(2, "t")};
    auto subset = [&](const std::vector<StateId>& pool) {
      StateSet s;
      for (StateId q : pool)
        if (cpds::testing::chance(rng, 0.5)) s.push_back(q);
      normalize(s);
      return s;
    };
    for (StateId src : {x, y})
      for (int i = cpds::testing::uniform(rng, 0, 3); i > 0; --i)
        a.add_long(LongForm{src, 0, cpds::testing::chance(rng, 0.3) ? subset(pool2) : StateSet{}, {subset(pool1), subset(pool2)}},
                   Justification{});
    std::set<std::pair<StateSet, std::vector<StateSet>>> brute;
    for (const auto& [i, lx] : a.long_forms_from(x, 0))
      for (const auto& [j, ly] : a.long_forms_from(y, 0))
        brute.emplace(set_union(lx.branch, ly.branch),
                      std::vector<StateSet>{set_union(lx.targets[0], ly.targets[0]), set_union(lx.targets[1], ly.targets[1])});
    std::set<std::pair<StateSet, std::vector<StateSet>>> got;
    for (const Lifted& l : a.lifted(make_set({x, y}), 0, 2)) got.emplace(l.branch, l.targets);
    EXPECT_EQ(got, brute);
  }
}

TEST(Uniqueness, AtMostOneTransitionPerStateAndTargetSet) {
  std::mt19937 rng(21);
  for (int i = 0; i < 50; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    cpds::testing::AutomatonParams ap;
    ap.transitions = 30;
    StackAutomaton a = cpds::testing::random_automaton(rng, m, ap);
    for (StateId q = 0; q < a.num_states(); ++q) {
      std::set<StateSet> keys;
      for (const auto& [key, mid] : a.children_of(q)) EXPECT_TRUE(keys.insert(key).second);
    }
    std::set<std::string> forms;
    for (TransId t = 0; t < a.num_transitions(); ++t) EXPECT_TRUE(forms.insert(long_form_string(a, m, a.long_form(t))).second);
  }
}

// Every stack of at most six nodes is checked against the run-annotation
// characterisation of acceptance, and every enumerated member witnesses
// non-emptiness of the state accepting it.
TEST(Membership, AgreesWithRunCheckerOnAllSmallStacks) {
  std::mt19937 rng(6);
  long checked = 0;
  for (int i = 0; i < 50; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    cpds::testing::AutomatonParams ap;
    ap.transitions = 10;
    ap.branch_prob = 0.5;
    StackAutomaton a = cpds::testing::random_automaton(rng, m, ap);
    const std::vector<bool> nonempty = a.nonempty_states();
    std::vector<bool> witnessed(nonempty.size(), false);
    cpds::testing::enumerate_stacks(m.order, m.num_symbols(), 6, cpds::testing::link_orders_of(m), [&](const Stack& w) {
      WordGraph<Stack> g(w);
      const StateSet lab = a.label(g)[static_cast<std::size_t>(g.root())];
      const StateSet runs = run_accepting_states(a, w);
      ASSERT_EQ(lab, runs) << m.stack_string(w);
      for (StateId q : lab) witnessed[static_cast<std::size_t>(q)] = true;
      ++checked;
    });
    for (std::size_t q = 0; q < nonempty.size(); ++q)
      if (witnessed[q]) {
        EXPECT_TRUE(nonempty[q]) << a.state_name(static_cast<StateId>(q));
      }
  }
  EXPECT_GT(checked, 1000);
}

}  // namespace
