#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cpds/fast.hpp"
#include "cpds/io.hpp"
#include "cpds/saturation.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;
using cpds::testing::config;
using cpds::testing::long_forms;

TEST(FastSaturation, WorkedExampleMatchesNaive) {
  ModelFile mf = cpds::testing::worked_model();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult fast = saturate_fast(mf.model, a0);
  SaturationResult naive = saturate_naive(mf.model, a0);
  EXPECT_EQ(long_forms(fast.automaton, mf.model), long_forms(naive.automaton, mf.model));
  EXPECT_EQ(long_forms(fast.automaton, mf.model).size(), 5u);
  EXPECT_TRUE(accepts_config(fast, config(mf, "q1", "[[b][c][d]]")));
}

TEST(FastSaturation, EmptyRulesKeepInitialShortForms) {
  ModelFile mf = cpds::testing::worked_model();
  mf.model.rules.clear();
  StackAutomaton a0 = cpds::testing::worked_initial(mf.model);
  SaturationResult r = saturate_fast(mf.model, a0);
  EXPECT_EQ(r.automaton.num_short_forms(), a0.num_short_forms());
  EXPECT_EQ(r.iterations, a0.num_short_forms());
}

TEST(FastSaturation, TimestampsIncreaseWithInsertionOrder) {
  ModelFile mf = cpds::testing::worked_model();
  SaturationResult r = saturate_fast(mf.model, cpds::testing::worked_initial(mf.model));
  std::uint64_t last = 0;
  for (TransId t = 0; t < r.automaton.num_transitions(); ++t) {
    const Justification& j = r.automaton.transition(t).just;
    if (j.kind == JustKind::Initial) continue;
    EXPECT_GT(j.step, last);
    last = j.step;
  }
}

TEST(FastSaturation, PushJustificationsDecodeToNaiveForm) {
  ModelFile mf = cpds::testing::worked_model();
  SaturationResult r = saturate_fast(mf.model, cpds::testing::worked_initial(mf.model));
  const StackAutomaton& a = r.automaton;
  bool seen_push = false;
  for (TransId t = 0; t < a.num_transitions(); ++t) {
    const Justification& j = a.transition(t).just;
    if (j.kind != JustKind::RuleTransSet || mf.model.rules[static_cast<std::size_t>(j.rule)].op.kind != OpKind::Push) continue;
    seen_push = true;
    // t is the transition of q3; its order-2 target set is empty, so T is too.
    EXPECT_EQ(a.state_name(a.long_form(j.trans).source), "q3");
    EXPECT_TRUE(j.set.empty());
  }
  EXPECT_TRUE(seen_push);
}

TEST(FastSaturation, TraceReportsWorklistEvents) {
  ModelFile mf = cpds::testing::worked_model();
  std::ostringstream trace;
  SaturationOptions opt;
  opt.trace = &trace;
  saturate_fast(mf.model, cpds::testing::worked_initial(mf.model), opt);
  EXPECT_NE(trace.str().find("process"), std::string::npos);
}

TEST(FastSaturation, TwoStateCountdownIsOrderIndependent) {
  // p pushes, and the copy below the top must be accepted from both q and r.
  ModelFile mf = parse_model(
      "order 2\nalphabet a\ncontrols p s\nrule p a push 2 s\n");
  StackAutomaton a0 = parse_automaton(
      "s -- a / {} --> ({};{q,r})\n"
      "q -- a / {} --> ({};{})\n"
      "r -- a / {} --> ({};{})\n", mf.model);
  SaturationResult fast = saturate_fast(mf.model, a0);
  EXPECT_EQ(long_forms(fast.automaton, mf.model), long_forms(saturate_naive(mf.model, a0).automaton, mf.model));
  EXPECT_TRUE(accepts_config(fast, config(mf, "p", "[[a]]")));
  StackAutomaton b0 = parse_automaton(
      "r -- a / {} --> ({};{})\n"
      "q -- a / {} --> ({};{})\n"
      "s -- a / {} --> ({};{q,r})\n", mf.model);
  SaturationResult fast_b = saturate_fast(mf.model, b0);
  EXPECT_EQ(long_forms(fast_b.automaton, mf.model), long_forms(fast.automaton, mf.model));
}

void expect_equivalent(std::mt19937& rng, const cpds::testing::ModelParams& mp, const cpds::testing::AutomatonParams& ap,
                       SatMode mode, int count) {
  for (int i = 0; i < count; ++i) {
    Cpds m = cpds::testing::random_model(rng, mp);
    StackAutomaton a0 = cpds::testing::random_automaton(rng, m, ap);
    SaturationOptions opt;
    opt.mode = mode;
    SaturationResult naive = saturate_naive(m, a0, opt);
    SaturationResult fast = saturate_fast(m, a0, opt);
    ASSERT_EQ(long_forms(fast.automaton, m), long_forms(naive.automaton, m))
        << model_to_string(ModelFile{m, {}, {}}) << automaton_to_string(a0, m);
    EXPECT_TRUE(is_saturated(m, fast.automaton, mode));
  }
}

TEST(FastSaturation, RandomEquivalenceWithNaive) {
  std::mt19937 rng(2024);
  cpds::testing::ModelParams mp;
  mp.min_order = 2;
  expect_equivalent(rng, mp, {}, SatMode::Full, 100);
}

TEST(FastSaturation, RandomEquivalenceOrderOne) {
  std::mt19937 rng(99);
  cpds::testing::ModelParams mp;
  mp.max_order = 1;
  expect_equivalent(rng, mp, {}, SatMode::Full, 50);
}

TEST(FastSaturation, RandomEquivalenceGuarded) {
  std::mt19937 rng(77);
  cpds::testing::ModelParams mp;
  mp.guard_prob = 0.6;
  expect_equivalent(rng, mp, {}, SatMode::Full, 60);
}

TEST(FastSaturation, RandomEquivalenceNonAlternating) {
  std::mt19937 rng(31);
  cpds::testing::ModelParams mp;
  mp.alt_fraction = 0;
  cpds::testing::AutomatonParams ap;
  ap.nonalternating = true;
  expect_equivalent(rng, mp, ap, SatMode::NonAlternating, 60);
}

}  // namespace
