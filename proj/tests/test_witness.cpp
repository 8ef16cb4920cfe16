#include <gtest/gtest.h>

#include <random>

#include "cpds/fast.hpp"
#include "cpds/io.hpp"
#include "cpds/saturation.hpp"
#include "cpds/witness.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;
using cpds::testing::config;

WitnessOptions checked() {
  WitnessOptions opt;
  opt.check_descent = true;
  opt.check_runs = true;
  return opt;
}

TEST(Witness, WorkedExampleFollowsTheFourRules) {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult r = saturate_naive(mf.model, a0);
  WitnessTree tree = extract_witness(mf.model, r.automaton, config(mf, "q1", "[[b][c][d]]"), checked());
  ASSERT_TRUE(tree.linear());
  std::vector<std::string> expected;
  for (const Rule& rule : mf.model.rules) expected.push_back(rule.name);
  EXPECT_EQ(tree.rule_sequence(), expected);
  std::string why;
  EXPECT_TRUE(validate_witness(tree, mf.model, a0, &why)) << why;
  const WitnessNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaves().front())];
  EXPECT_EQ(mf.model.config_string(leaf.config), mf.model.config_string(config(mf, "q5", "[[d]]")));
}

TEST(Witness, FastEngineWitnessIsValid) {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult r = saturate_fast(mf.model, a0);
  WitnessTree tree = extract_witness(mf.model, r.automaton, config(mf, "q1", "[[b][c][d]]"), checked());
  EXPECT_EQ(tree.rule_sequence().size(), 4u);
  EXPECT_TRUE(validate_witness(tree, mf.model, a0));
}

TEST(Witness, ConfigurationInTargetIsALeaf) {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult r = saturate_naive(mf.model, a0);
  WitnessTree tree = extract_witness(mf.model, r.automaton, config(mf, "q5", "[[d]]"), checked());
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_TRUE(tree.rule_sequence().empty());
  EXPECT_TRUE(validate_witness(tree, mf.model, a0));
}

TEST(Witness, UnacceptedConfigurationThrows) {
  ModelFile mf = cpds::testing::worked_model();
  SaturationResult r = saturate_naive(mf.model, cpds::testing::worked_initial(mf.model));
  EXPECT_THROW(extract_witness(mf.model, r.automaton, config(mf, "q5", "[[c]]")), WitnessError);
}

TEST(Witness, AlternatingRuleBranchesToEveryTarget) {
  ModelFile mf = parse_model("order 1\nalphabet a\ncontrols p q r\nalt p {q,r}\n");
  StackAutomaton a0 = parse_automaton("q -- a / {} --> ({})\nr -- a / {} --> ({})\n", mf.model);
  SaturationResult r = saturate_naive(mf.model, a0);
  WitnessTree tree = extract_witness(mf.model, r.automaton, config(mf, "p", "[a]"), checked());
  ASSERT_EQ(tree.root().children.size(), 2u);
  EXPECT_FALSE(tree.linear());
  EXPECT_EQ(tree.leaves().size(), 2u);
  EXPECT_TRUE(validate_witness(tree, mf.model, a0));
}

TEST(Witness, ValidationRejectsTamperedTrees) {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult r = saturate_naive(mf.model, a0);
  WitnessTree tree = extract_witness(mf.model, r.automaton, config(mf, "q1", "[[b][c][d]]"));
  WitnessTree wrong_stack = tree;
  wrong_stack.nodes[1].config = config(mf, "q2", "[[b][c][d]]");
  EXPECT_FALSE(validate_witness(wrong_stack, mf.model, a0));
  WitnessTree wrong_rule = tree;
  wrong_rule.nodes[0].rule_name = mf.model.rules[1].name;
  EXPECT_FALSE(validate_witness(wrong_rule, mf.model, a0));
  WitnessTree cut = tree;
  cut.nodes[2].children.clear();
  cut.nodes[2].rule = -1;
  EXPECT_FALSE(validate_witness(cut, mf.model, a0));
}

TEST(Witness, InitialRunIsTrimmedAndAccepting) {
  ModelFile mf = cpds::testing::worked_model();
  SaturationResult r = saturate_naive(mf.model, cpds::testing::worked_initial(mf.model));
  Configuration c = config(mf, "q3", "[[a^(2,2) b][a^(2,2) b][c][d]]");
  auto run = build_initial_run(r.automaton, c);
  ASSERT_TRUE(run.has_value());
  EXPECT_TRUE(accepting(r.automaton, *run, r.automaton.control_state(c.control)));
  EXPECT_TRUE(trimmed(r.automaton, *run));
  EXPECT_EQ(project(*run), c.stack);
}

TEST(Witness, MeasureOrdersByLatestStep) {
  ModelFile mf = cpds::testing::worked_model();
  SaturationResult r = saturate_naive(mf.model, cpds::testing::worked_initial(mf.model));
  const StackAutomaton& a = r.automaton;
  TransId early = -1, late = -1;
  for (TransId t = 0; t < a.num_transitions(); ++t) {
    if (a.transition(t).just.step == 1) early = t;
    if (a.transition(t).just.step == 3) late = t;
  }
  ASSERT_GE(early, 0);
  ASSERT_GE(late, 0);
  cpds::Run u = cpds::Run::from_children(1, {cpds::Run::character(RunLabel{0, {late}})});
  cpds::Run v = cpds::Run::from_children(1, {cpds::Run::character(RunLabel{0, {early}}), cpds::Run::character(RunLabel{0, {early}})});
  EXPECT_TRUE(measure_less(a, u, v, 1));
  EXPECT_FALSE(measure_less(a, v, u, 1));
  EXPECT_FALSE(measure_less(a, u, u, 1));
}

// Runs the whole extraction on random systems and random accepted
// configurations, with descent and run validity checked at every step.
void random_witnesses(std::mt19937& rng, const cpds::testing::ModelParams& mp, bool fast, int models) {
  int extracted = 0;
  int skipped = 0;
  for (int i = 0; i < models; ++i) {
    Cpds m = cpds::testing::random_model(rng, mp);
    StackAutomaton a0 = cpds::testing::random_automaton(rng, m, {});
    Deadline budget(2.0);
    SaturationOptions opt;
    opt.deadline = &budget;
    SaturationResult r;
    try {
      r = fast ? saturate_fast(m, a0, opt) : saturate_naive(m, a0, opt);
    } catch (const TimeoutError&) {
      ++skipped;
      continue;
    }
    const Cpds replay = m.is_guarded() ? trivialise(m) : m;
    for (int j = 0; j < 20; ++j) {
      Stack w = cpds::testing::random_stack(rng, m.order, m.num_symbols(), cpds::testing::uniform(rng, 0, 8),
                                            cpds::testing::link_orders_of(m));
      Configuration c{cpds::testing::uniform(rng, 0, m.num_controls() - 1), w};
      if (!accepts_config(r.automaton, c)) continue;
      WitnessTree tree;
      ASSERT_NO_THROW(tree = extract_witness(m, r.automaton, c, checked()))
          << model_to_string(ModelFile{m, {}, {}}) << automaton_to_string(a0, m) << m.config_string(c);
      std::string why;
      ASSERT_TRUE(validate_witness(tree, replay, a0, &why))
          << why << '\n' << model_to_string(ModelFile{m, {}, {}}) << automaton_to_string(a0, m) << m.config_string(c);
      ++extracted;
    }
  }
  EXPECT_GT(extracted, models);
  EXPECT_LT(skipped, models / 10);
}

TEST(Witness, RandomNaiveWitnessesReplay) {
  std::mt19937 rng(5);
  random_witnesses(rng, {}, false, 80);
}

TEST(Witness, RandomFastWitnessesReplay) {
  std::mt19937 rng(6);
  random_witnesses(rng, {}, true, 80);
}

TEST(Witness, RandomGuardedWitnessesReplayUnguarded) {
  std::mt19937 rng(7);
  cpds::testing::ModelParams mp;
  mp.guard_prob = 0.5;
  random_witnesses(rng, mp, true, 40);
}

TEST(RunMembership, AgreesWithLabellingOnRandomStacks) {
  std::mt19937 rng(11);
  int checked_count = 0;
  for (int i = 0; i < 60; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    cpds::testing::AutomatonParams ap;
    ap.transitions = 12;
    ap.branch_prob = 0.5;
    StackAutomaton a = cpds::testing::random_automaton(rng, m, ap);
    for (int j = 0; j < 20; ++j) {
      Stack w = cpds::testing::random_stack(rng, m.order, m.num_symbols(), cpds::testing::uniform(rng, 0, 8),
                                            cpds::testing::link_orders_of(m));
      WordGraph<Stack> g(w);
      const StateSet by_labelling = a.label(g)[static_cast<std::size_t>(g.root())];
      ASSERT_EQ(run_accepting_states(a, w), by_labelling) << m.stack_string(w);
      for (StateId q : by_labelling) EXPECT_TRUE(membership_by_runs(a, w, {q}));
      ++checked_count;
    }
  }
  EXPECT_GT(checked_count, 900);
}

}  // namespace
