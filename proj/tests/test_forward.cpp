#include <gtest/gtest.h>

#include <random>

#include "cpds/fast.hpp"
#include "cpds/forward.hpp"
#include "cpds/io.hpp"
#include "cpds/oracle.hpp"
#include "cpds/pipeline.hpp"
#include "fixtures.hpp"
#include "random_models.hpp"

namespace {

using namespace cpds;
using cpds::testing::config;

const char* kPushPop =
    "order 2\n"
    "alphabet a b\n"
    "linkorder b=2\n"
    "controls q0 q1 q2\n"
    "init q0 [[a]]\n"
    "rule q0 a cpush b 2 q1\n"
    "rule q1 b pop 1 q2\n";

HeadId head_of(const ApproxGraph& g, const ModelFile& mf, const std::string& p, const std::string& a) {
  auto h = g.find(Head{mf.model.control(p), mf.model.symbol(a)});
  return h ? *h : kNoHead;
}

std::set<std::string> descriptor_strings(const ApproxGraph& g, HeadId h) {
  std::set<std::string> out;
  for (const Descriptor& d : g.descriptors(h)) out.insert(g.descriptor_string(d));
  return out;
}

TEST(ForwardGraph, PushThenPopHandExecution) {
  ModelFile mf = parse_model(kPushPop);
  ApproxGraph g = build_graph(mf.model, *mf.init);
  std::set<std::string> heads;
  for (HeadId h : g.heads()) heads.insert(g.head_name(h));
  EXPECT_EQ(heads, (std::set<std::string>{"(q0,a)", "(q1,b)", "(q2,a)"}));
  // push_b^2 from [[a]]: pop_1 leads back to (q0,a); the link points to an
  // empty order-2 remainder, so collapse gives nothing.
  EXPECT_EQ(descriptor_strings(g, head_of(g, mf, "q1", "b")), (std::set<std::string>{"<_,(q0,a),_>"}));
  EXPECT_EQ(descriptor_strings(g, head_of(g, mf, "q2", "a")), (std::set<std::string>{"<_,_,_>"}));
  ASSERT_EQ(g.summaries().size(), 1u);
  const SummaryEdge& s = g.summaries().front();
  EXPECT_EQ(s.from, head_of(g, mf, "q0", "a"));
  EXPECT_EQ(s.prefix, std::vector<HeadId>{kNoHead});
  EXPECT_EQ(s.to, head_of(g, mf, "q2", "a"));
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(ForwardGraph, NoRulesGivesOnlyTheInitialHead) {
  ModelFile mf = parse_model(kPushPop);
  mf.model.rules.clear();
  ApproxGraph g = build_graph(mf.model, *mf.init);
  ASSERT_EQ(g.heads().size(), 1u);
  EXPECT_EQ(g.head_name(g.heads().front()), "(q0,a)");
  EXPECT_TRUE(g.edges().empty());
  EXPECT_TRUE(g.summaries().empty());
}

TEST(ForwardGraph, WorkedExampleKeepsAllFourRules) {
  ModelFile mf = cpds::testing::worked_model();
  ApproxGraph g = build_graph(mf.model, *mf.init);
  std::vector<int> back = back_rules(g, mf.targets);
  std::set<RuleId> rules;
  for (int i : back) rules.insert(g.edges()[static_cast<std::size_t>(i)].rule);
  EXPECT_EQ(rules.size(), 4u);
  Cpds guarded = extract_guarded(mf.model, g, back, {mf.init->stack});
  EXPECT_EQ(guarded.num_rules(), 4);
}

TEST(ForwardGraph, BackRulesEmptyWithoutTargetHead) {
  ModelFile mf = parse_model(kPushPop);
  ApproxGraph g = build_graph(mf.model, *mf.init);
  EXPECT_TRUE(back_rules(g, {}).empty());
  Cpds extra = mf.model;
  const Control lost = extra.add_control("lost");
  EXPECT_TRUE(back_rules(build_graph(extra, *mf.init), {lost}).empty());
}

TEST(ForwardGraph, BackRulesFollowALinearChain) {
  ModelFile mf = parse_model(
      "order 1\nalphabet a b c\ncontrols p q r s\ninit p [a]\n"
      "rule p a rew b q\nrule q b rew c r\nrule r c rew a s\nrule p b rew a p\n");
  ApproxGraph g = build_graph(mf.model, *mf.init);
  std::vector<int> back = back_rules(g, {mf.model.control("s")});
  std::set<std::string> names;
  for (int i : back) names.insert(mf.model.rules[static_cast<std::size_t>(g.edges()[static_cast<std::size_t>(i)].rule)].name);
  EXPECT_EQ(names, (std::set<std::string>{"r1", "r2", "r3"}));
}

TEST(ForwardGraph, PopGuardCollectsReachedSymbols) {
  ModelFile mf = parse_model(kPushPop);
  ApproxGraph g = build_graph(mf.model, *mf.init);
  Cpds guarded = extract_guarded(mf.model, g, back_rules(g, {mf.model.control("q2")}));
  ASSERT_EQ(guarded.num_rules(), 2);
  const Rule& pop_rule = guarded.rules[1];
  ASSERT_TRUE(pop_rule.op.guard.has_value());
  EXPECT_EQ(*pop_rule.op.guard, std::vector<Symbol>{mf.model.symbol("a")});
  EXPECT_FALSE(guarded.rules[0].op.guard.has_value());
}

TEST(ForwardGraph, UnusedRulesAreDropped) {
  ModelFile mf = parse_model(
      "order 1\nalphabet a b\ncontrols p q r\ninit p [a]\n"
      "rule p a rew b q\nrule p a rew a r\n");
  ApproxGraph g = build_graph(mf.model, *mf.init);
  Cpds guarded = extract_guarded(mf.model, g, back_rules(g, {mf.model.control("q")}));
  ASSERT_EQ(guarded.num_rules(), 1);
  EXPECT_EQ(guarded.rules[0].name, "r1");
}

TEST(ForwardGraph, GuardIsWholeAlphabetWhenEverySymbolIsReached) {
  ModelFile mf = parse_model(
      "order 1\nalphabet a b\ncontrols p q r\ninit p [a a]\n"
      "rule p a rew b p\nrule p a rew a q\nrule p b rew a q\nrule q a pop 1 r\nrule q b pop 1 r\n"
      "rule p a cpush b 1 p\nrule p b cpush a 1 p\n");
  ApproxGraph g = build_graph(mf.model, *mf.init);
  Cpds guarded = extract_guarded(mf.model, g, back_rules(g, {mf.model.control("r")}));
  for (const Rule& r : guarded.rules)
    if (r.op.kind == OpKind::Pop) {
      ASSERT_TRUE(r.op.guard.has_value());
      EXPECT_EQ(r.op.guard->size(), 2u);
    }
}

TEST(ForwardGraph, CollapseGuardIsAlphabetWhenLinkOrdersAreMixed) {
  ModelFile mf = parse_model(
      "order 2\nalphabet a b\ncontrols p q r\ninit p [[a][a]]\n"
      "rule p a cpush b 1 q\nrule p a cpush b 2 q\nrule q b collapse 2 r\n");
  ApproxGraph g = build_graph(mf.model, *mf.init);
  Cpds guarded = extract_guarded(mf.model, g, back_rules(g, {mf.model.control("r")}));
  bool seen = false;
  for (const Rule& r : guarded.rules)
    if (r.op.kind == OpKind::Collapse) {
      seen = true;
      ASSERT_TRUE(r.op.guard.has_value());
      EXPECT_EQ(r.op.guard->size(), 2u);
    }
  EXPECT_TRUE(seen);
}

TEST(ForwardGraph, DumpListsEveryComponent) {
  ModelFile mf = parse_model(kPushPop);
  std::string dump = graph_to_string(build_graph(mf.model, *mf.init));
  EXPECT_NE(dump.find("head (q1,b)"), std::string::npos);
  EXPECT_NE(dump.find("edge (q0,a) r1 (q1,b)"), std::string::npos);
  EXPECT_NE(dump.find("desc (q1,b) <_,(q0,a),_>"), std::string::npos);
  EXPECT_NE(dump.find("summary (q0,a) <_> (q2,a)"), std::string::npos);
}

TEST(ForwardGraph, SizeStaysBelowTheClosedFormBound) {
  std::mt19937 rng(41);
  for (int i = 0; i < 100; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    Configuration c0{0, cpds::testing::singleton_stack(m.order, 0)};
    ApproxGraph g = build_graph(m, c0);
    const double hs = static_cast<double>(m.num_controls()) * m.num_symbols();
    double bound = hs + hs * m.num_rules() * hs + hs * std::pow(hs, m.order + 1);
    for (int j = 2; j <= m.order; ++j) bound += hs * std::pow(hs, m.order - j) * hs;
    // Order-1 summaries carry a prefix of length n - 1 as well.
    bound += hs * std::pow(hs, m.order - 1) * hs;
    EXPECT_LE(static_cast<double>(g.size()), bound);
  }
}

// Every configuration reached by bounded exploration is covered: its head is
// in H, its stack is described by a descriptor of that head, and each step it
// takes is an edge of the graph.
void expect_covering(std::mt19937& rng, const cpds::testing::ModelParams& mp, bool singleton, int count) {
  int checked = 0;
  for (int i = 0; i < count; ++i) {
    Cpds m = cpds::testing::random_model(rng, mp);
    Stack w = singleton ? cpds::testing::singleton_stack(m.order, 0)
                        : cpds::testing::random_stack(rng, m.order, m.num_symbols(), cpds::testing::uniform(rng, 1, 5),
                                                      cpds::testing::link_orders_of(m));
    Configuration c0{0, w};
    if (!top_char(w)) continue;
    ApproxGraph g = build_graph(m, c0);
    OracleOptions oo;
    oo.stack_cap = 12;
    ReachSet reach = bounded_post(m, c0, 5, oo);
    for (const Configuration& c : reach.all) {
      if (!top_char(c.stack)) continue;
      ASSERT_TRUE(graph_covers(g, c)) << model_to_string(ModelFile{m, {}, {}}) << m.config_string(c0) << " reaches "
                                      << m.config_string(c) << '\n'
                                      << graph_to_string(g);
      ++checked;
      const HeadId h = *g.find(Head{c.control, top_char(c.stack)->label()});
      for (const Step& s : successors(m, c))
        for (const Configuration& o : s.outcome) {
          auto t = top_char(o.stack);
          if (!t) continue;
          auto h2 = g.find(Head{o.control, t->label()});
          ASSERT_TRUE(h2.has_value());
          EXPECT_TRUE(g.has_edge(GraphEdge{h, s.rule, *h2}));
        }
    }
  }
  EXPECT_GT(checked, count);
}

TEST(ForwardGraph, CoversReachableConfigurationsFromSingletons) {
  std::mt19937 rng(8);
  expect_covering(rng, {}, true, 150);
}

TEST(ForwardGraph, CoversReachableConfigurationsFromLargerStacks) {
  std::mt19937 rng(9);
  expect_covering(rng, {}, false, 150);
}

TEST(ForwardGraph, CoversGuardedModels) {
  std::mt19937 rng(10);
  cpds::testing::ModelParams mp;
  mp.guard_prob = 0.5;
  expect_covering(rng, mp, false, 80);
}

TEST(ForwardGraph, WideningGuardsNeverLosesReachability) {
  std::mt19937 rng(12);
  int reachable = 0;
  for (int i = 0; i < 60; ++i) {
    Cpds m = cpds::testing::random_model(rng, {});
    Configuration c0{0, cpds::testing::singleton_stack(m.order, 0)};
    const std::vector<Control> targets{m.num_controls() - 1};
    ApproxGraph g = build_graph(m, c0);
    Cpds guarded = extract_guarded(m, g, back_rules(g, targets));
    Cpds wider = guarded;
    for (Rule& r : wider.rules)
      if (r.op.guard)
        for (Symbol s = 0; s < m.num_symbols(); ++s)
          if (cpds::testing::chance(rng, 0.5)) insert(*r.op.guard, s);
    StackAutomaton a0 = universal_automaton(m, targets);
    Deadline budget(2.0);
    SaturationOptions opt;
    opt.deadline = &budget;
    try {
      const bool narrow = accepts_config(saturate_fast(guarded, a0, opt), c0);
      const bool wide = accepts_config(saturate_fast(wider, a0, opt), c0);
      if (narrow) {
        ++reachable;
        EXPECT_TRUE(wide);
      }
    } catch (const TimeoutError&) {
    }
  }
  EXPECT_GT(reachable, 0);
}

}  // namespace
