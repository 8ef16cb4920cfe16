#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cpds/io.hpp"
#include "cpds/pipeline.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;
using cpds::testing::config;

TEST(Pipeline, WorkedExampleIsReachableInEverySetting) {
  ModelFile mf = cpds::testing::worked_model();
  for (Engine e : {Engine::Fast, Engine::Naive})
    for (ForwardMode f : {ForwardMode::On, ForwardMode::Prune, ForwardMode::Off}) {
      PipelineConfig cfg;
      cfg.engine = e;
      cfg.forward = f;
      Verdict v = run_pipeline(mf, cfg);
      ASSERT_EQ(v.kind, VerdictKind::Reachable) << v.message;
      EXPECT_EQ(v.exit_code(), 1);
      EXPECT_EQ(v.witness.rule_sequence(), (std::vector<std::string>{"r1", "r2", "r3", "r4"}));
    }
}

TEST(Pipeline, FreshTargetIsUnreachable) {
  ModelFile mf = parse_model(cpds::testing::read_file(std::string(CPDS_MODELS_DIR) + "/worked.cpds") + "target fresh\n");
  mf.targets = {mf.model.control("fresh")};
  for (ForwardMode f : {ForwardMode::On, ForwardMode::Prune, ForwardMode::Off}) {
    PipelineConfig cfg;
    cfg.forward = f;
    Verdict v = run_pipeline(mf, cfg);
    EXPECT_EQ(v.kind, VerdictKind::Unreachable) << v.message;
    EXPECT_EQ(v.exit_code(), 0);
  }
}

TEST(Pipeline, ExplicitAutomatonReplacesTargets) {
  ModelFile mf = cpds::testing::worked_model();
  mf.targets.clear();
  PipelineConfig cfg;
  cfg.automaton = cpds::testing::worked_initial(mf.model);
  Verdict v = run_pipeline(mf, cfg);
  ASSERT_EQ(v.kind, VerdictKind::Reachable) << v.message;
  EXPECT_EQ(v.witness.rule_sequence().size(), 4u);
}

TEST(Pipeline, NonAlternatingModeRejectsAlternatingModels) {
  ModelFile mf = parse_model("order 1\nalphabet a\ncontrols p q e\ninit p [a]\ntarget e\nalt p {q,e}\n");
  PipelineConfig cfg;
  cfg.mode = SatMode::NonAlternating;
  Verdict v = run_pipeline(mf, cfg);
  EXPECT_EQ(v.kind, VerdictKind::Inconclusive);
  EXPECT_EQ(v.exit_code(), 2);
  EXPECT_NE(v.message.find("non-alternating"), std::string::npos);
}

TEST(Pipeline, MissingInitialConfigurationIsInconclusive) {
  ModelFile mf = parse_model("order 1\nalphabet a\ncontrols p\ntarget p\n");
  EXPECT_EQ(run_pipeline(mf, {}).kind, VerdictKind::Inconclusive);
}

TEST(Pipeline, GraphDumpIsWritten) {
  ModelFile mf = cpds::testing::worked_model();
  std::ostringstream dump;
  PipelineConfig cfg;
  cfg.graph_dump = &dump;
  Verdict v = run_pipeline(mf, cfg);
  EXPECT_EQ(v.kind, VerdictKind::Reachable);
  EXPECT_NE(dump.str().find("head (q1,b)"), std::string::npos);
  EXPECT_EQ(v.rules_kept, 4u);
}

TEST(UniversalAutomaton, AcceptsExactlyTheTargetControls) {
  std::mt19937 rng(31);
  for (int i = 0; i < 50; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    const Control target = m.num_controls() - 1;
    StackAutomaton a = universal_automaton(m, {target});
    for (int j = 0; j < 10; ++j) {
      Stack w = cpds::testing::random_stack(rng, m.order, m.num_symbols(), cpds::testing::uniform(rng, 0, 8),
                                            cpds::testing::link_orders_of(m));
      for (Control c = 0; c < m.num_controls(); ++c)
        EXPECT_EQ(accepts_config(a, Configuration{c, w}), c == target) << m.stack_string(w);
    }
  }
}

// The verdict never depends on the engine or on how much the forward phase
// prunes.  Instances that time out in any setting are skipped.
TEST(Pipeline, VerdictsAgreeAcrossSettings) {
  std::mt19937 rng(77);
  int compared = 0;
  int reachable = 0;
  for (int i = 0; i < 80; ++i) {
    ModelFile mf{cpds::testing::random_model(rng, {}), {}, {}};
    mf.init = Configuration{0, cpds::testing::random_stack(rng, mf.model.order, mf.model.num_symbols(),
                                                           cpds::testing::uniform(rng, 0, 3), cpds::testing::link_orders_of(mf.model))};
    mf.targets = {mf.model.num_controls() - 1};
    std::vector<VerdictKind> kinds;
    for (Engine e : {Engine::Fast, Engine::Naive})
      for (ForwardMode f : {ForwardMode::On, ForwardMode::Prune, ForwardMode::Off}) {
        PipelineConfig cfg;
        cfg.engine = e;
        cfg.forward = f;
        cfg.timeout_seconds = 2;
        Verdict v = run_pipeline(mf, cfg);
        if (v.kind == VerdictKind::Inconclusive) {
          EXPECT_EQ(v.message, "timeout");
        }
        kinds.push_back(v.kind);
      }
    if (std::find(kinds.begin(), kinds.end(), VerdictKind::Inconclusive) != kinds.end()) continue;
    ++compared;
    reachable += kinds[0] == VerdictKind::Reachable;
    for (VerdictKind k : kinds) EXPECT_EQ(k, kinds[0]) << model_to_string(mf);
  }
  EXPECT_GT(compared, 60);
  EXPECT_GT(reachable, 5);
}

}  // namespace
