#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cpds/model.hpp"
#include "cpds/saturation.hpp"
#include "cpds/stack.hpp"

namespace cpds {

// A head (p, a): a control and the top character of a reachable configuration.
// Heads with a negative control are carriers for the substacks of a
// non-singleton initial stack; they have no rules and are not part of H.
struct Head {
  Control control = -1;
  Symbol symbol = -1;
  friend auto operator<=>(const Head&, const Head&) = default;
};

using HeadId = int;
inline constexpr HeadId kNoHead = -1;  // the bottom element of a descriptor

// <h_n, ..., h_1, h_c> stored as d[k-1] = h_k for 1 <= k <= n and d[n] = h_c.
using Descriptor = std::vector<HeadId>;

struct GraphEdge {
  HeadId from = kNoHead;
  RuleId rule = -1;
  HeadId to = kNoHead;
  friend auto operator<=>(const GraphEdge&, const GraphEdge&) = default;
};

// Summary edge (h, <h'_n, ..., h'_{k+1}>, h'); prefix[j] = h'_{k+1+j}.
struct SummaryEdge {
  HeadId from = kNoHead;
  std::vector<HeadId> prefix;
  HeadId to = kNoHead;
  friend auto operator<=>(const SummaryEdge&, const SummaryEdge&) = default;
};

struct ForwardOptions {
  const Deadline* deadline = nullptr;
};

class ApproxGraph {
 public:
  ApproxGraph() = default;
  explicit ApproxGraph(const Cpds& m) : model_(&m), order_(m.order) {}

  int order() const { return order_; }
  const Cpds& model() const { return *model_; }

  std::optional<HeadId> find(const Head& h) const {
    auto it = index_.find(h);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const Head& head(HeadId h) const { return heads_.at(static_cast<std::size_t>(h)); }
  int num_heads() const { return static_cast<int>(heads_.size()); }
  bool in_h(HeadId h) const { return h >= 0 && in_h_.at(static_cast<std::size_t>(h)); }

  // H in insertion order.
  std::vector<HeadId> heads() const {
    std::vector<HeadId> out;
    for (HeadId h = 0; h < num_heads(); ++h)
      if (in_h(h)) out.push_back(h);
    return out;
  }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<Descriptor>& descriptors(HeadId h) const { return desc_.at(static_cast<std::size_t>(h)); }
  const std::vector<SummaryEdge>& summaries() const { return summaries_; }

  bool has_edge(const GraphEdge& e) const { return edge_set_.count(e) > 0; }
  bool has_descriptor(HeadId h, const Descriptor& d) const {
    return h >= 0 && h < num_heads() && desc_set_[static_cast<std::size_t>(h)].count(d) > 0;
  }
  bool has_summary(const SummaryEdge& s) const { return summary_set_.count(s) > 0; }

  // |H| + |E| + |B| + |U|.
  std::size_t size() const {
    std::size_t n = heads().size() + edges_.size() + summaries_.size();
    for (const auto& ds : desc_) n += ds.size();
    return n;
  }

  std::string head_name(HeadId h) const {
    if (h == kNoHead) return "_";
    const Head& x = head(h);
    const std::string control = x.control >= 0 ? model_->control_name(x.control) : "@" + std::to_string(-x.control - 2);
    return "(" + control + "," + model_->symbol_name(x.symbol) + ")";
  }

  std::string descriptor_string(const Descriptor& d) const {
    std::string s = "<";
    for (int k = order_; k >= 1; --k) s += head_name(d[static_cast<std::size_t>(k - 1)]) + ",";
    return s + head_name(d[static_cast<std::size_t>(order_)]) + ">";
  }

  // Line-oriented dump: heads, edges, descriptors and summary edges.
  void dump(std::ostream& os) const {
    for (HeadId h : heads()) os << "head " << head_name(h) << '\n';
    for (const GraphEdge& e : edges_)
      os << "edge " << head_name(e.from) << ' ' << model_->rules[static_cast<std::size_t>(e.rule)].name << ' ' << head_name(e.to) << '\n';
    for (HeadId h = 0; h < num_heads(); ++h)
      for (const Descriptor& d : descriptors(h)) os << "desc " << head_name(h) << ' ' << descriptor_string(d) << '\n';
    for (const SummaryEdge& s : summaries_) {
      os << "summary " << head_name(s.from) << " <";
      for (std::size_t j = s.prefix.size(); j-- > 0;) os << head_name(s.prefix[j]) << (j ? "," : "");
      os << "> " << head_name(s.to) << '\n';
    }
  }

 private:
  friend class ForwardBuilder;

  HeadId intern(const Head& h) {
    auto [it, inserted] = index_.emplace(h, num_heads());
    if (inserted) {
      heads_.push_back(h);
      in_h_.push_back(false);
      desc_.emplace_back();
      desc_set_.emplace_back();
      summaries_from_.emplace_back();
    }
    return it->second;
  }

  const Cpds* model_ = nullptr;
  int order_ = 0;
  std::vector<Head> heads_;
  std::map<Head, HeadId> index_;
  std::vector<bool> in_h_;
  std::vector<GraphEdge> edges_;
  std::set<GraphEdge> edge_set_;
  std::vector<std::vector<Descriptor>> desc_;
  std::vector<std::set<Descriptor>> desc_set_;
  std::vector<SummaryEdge> summaries_;
  std::set<SummaryEdge> summary_set_;
  std::vector<std::vector<int>> summaries_from_;
};

// The approximate summary algorithm.  The recursive procedures are run from a
// worklist of (head, descriptor) pairs whose rules have not been processed.
class ForwardBuilder {
 public:
  ForwardBuilder(const Cpds& m, const ForwardOptions& opt) : m_(m), opt_(opt), g_(m), n_(m.order) {}

  ApproxGraph build(const Configuration& c0) {
    auto top = top_char(c0.stack);
    if (!top) throw ModelError("initial stack has no top character");
    const HeadId h0 = g_.intern(Head{c0.control, top->label()});
    mark_h(h0);
    add_descriptor(h0, describe(c0.stack));
    std::uint64_t ticks = 0;
    while (!work_.empty()) {
      if (opt_.deadline && (++ticks & 0xff) == 0) opt_.deadline->check();
      auto [h, d] = work_.front();
      work_.pop_front();
      process(h, d);
      for (std::size_t i = 0; i < g_.summaries_from_[static_cast<std::size_t>(h)].size(); ++i) {
        const SummaryEdge s = g_.summaries_[static_cast<std::size_t>(g_.summaries_from_[static_cast<std::size_t>(h)][i])];
        add_descriptor(s.to, splice(s.prefix, d));
      }
    }
    return std::move(g_);
  }

 private:
  void mark_h(HeadId h) { g_.in_h_[static_cast<std::size_t>(h)] = true; }

  HeadId real_head(Control p, Symbol a) {
    const HeadId h = g_.intern(Head{p, a});
    mark_h(h);
    return h;
  }

  void add_edge(HeadId from, RuleId r, HeadId to) {
    GraphEdge e{from, r, to};
    if (g_.edge_set_.insert(e).second) g_.edges_.push_back(e);
  }

  // <prefix (orders n..k+1), d's components of orders k..1 and collapse>.
  Descriptor splice(const std::vector<HeadId>& prefix, const Descriptor& d) const {
    Descriptor out = d;
    const int k = n_ - static_cast<int>(prefix.size());
    for (std::size_t j = 0; j < prefix.size(); ++j) out[static_cast<std::size_t>(k) + j] = prefix[j];
    return out;
  }

  std::vector<HeadId> prefix_above(const Descriptor& d, int k) const {
    return std::vector<HeadId>(d.begin() + k, d.begin() + n_);
  }

  void add_descriptor(HeadId h, const Descriptor& d) {
    if (!g_.desc_set_[static_cast<std::size_t>(h)].insert(d).second) return;
    g_.desc_[static_cast<std::size_t>(h)].push_back(d);
    work_.emplace_back(h, d);
  }

  void add_summary(HeadId from, std::vector<HeadId> prefix, HeadId to) {
    SummaryEdge s{from, std::move(prefix), to};
    if (!g_.summary_set_.insert(s).second) return;
    const int id = static_cast<int>(g_.summaries_.size());
    g_.summaries_.push_back(s);
    g_.summaries_from_[static_cast<std::size_t>(from)].push_back(id);
    for (std::size_t i = 0; i < g_.desc_[static_cast<std::size_t>(from)].size(); ++i) {
      const Descriptor d = g_.desc_[static_cast<std::size_t>(from)][i];
      add_descriptor(s.to, splice(s.prefix, d));
    }
  }

  static bool guard_admits(const Operation& op, Symbol b) {
    return !op.guard || std::binary_search(op.guard->begin(), op.guard->end(), b);
  }

  void process(HeadId h, const Descriptor& d) {
    const Head cur = g_.head(h);
    if (cur.control < 0) return;
    for (RuleId r = 0; r < m_.num_rules(); ++r) {
      const Rule& rule = m_.rules[static_cast<std::size_t>(r)];
      if (rule.from != cur.control) continue;
      if (rule.alternating) {
        for (Control p : rule.targets) {
          const HeadId next = real_head(p, cur.symbol);
          add_edge(h, r, next);
          add_descriptor(next, d);
        }
        continue;
      }
      if (rule.symbol != cur.symbol) continue;
      const Operation& op = rule.op;
      const int k = op.order;
      switch (op.kind) {
        case OpKind::Rew: {
          const HeadId next = real_head(rule.to, op.symbol);
          add_edge(h, r, next);
          add_descriptor(next, d);
          break;
        }
        case OpKind::PushChar: {
          const HeadId next = real_head(rule.to, op.symbol);
          add_edge(h, r, next);
          Descriptor nd = d;
          nd[0] = h;
          nd[static_cast<std::size_t>(n_)] = d[static_cast<std::size_t>(k - 1)];
          add_descriptor(next, nd);
          break;
        }
        case OpKind::Push: {
          const HeadId next = real_head(rule.to, cur.symbol);
          add_edge(h, r, next);
          Descriptor nd = d;
          nd[static_cast<std::size_t>(k - 1)] = h;
          add_descriptor(next, nd);
          break;
        }
        case OpKind::Pop:
        case OpKind::Collapse: {
          const HeadId via = op.kind == OpKind::Pop ? d[static_cast<std::size_t>(k - 1)] : d[static_cast<std::size_t>(n_)];
          if (via == kNoHead) break;
          const Symbol b = g_.head(via).symbol;
          if (!guard_admits(op, b)) break;
          const HeadId next = real_head(rule.to, b);
          add_edge(h, r, next);
          add_summary(via, prefix_above(d, k), next);
          break;
        }
      }
    }
  }

  // A descriptor for an initial stack: every defined pop and collapse result is
  // described through a carrier head holding that substack's own descriptor.
  Descriptor describe(const Stack& w) {
    Descriptor d(static_cast<std::size_t>(n_) + 1, kNoHead);
    for (int k = 1; k <= n_; ++k) {
      auto u = pop(w, k);
      if (u && top_char(*u)) d[static_cast<std::size_t>(k - 1)] = carrier(*u);
    }
    auto c = top_char(w);
    if (c && c->link()) {
      auto u = collapse(w, c->link()->order);
      if (u && top_char(*u)) d[static_cast<std::size_t>(n_)] = carrier(*u);
    }
    return d;
  }

  HeadId carrier(const Stack& u) {
    auto it = carriers_.find(u);
    if (it != carriers_.end()) return it->second;
    const Control synthetic = -2 - static_cast<Control>(carriers_.size());
    const HeadId h = g_.intern(Head{synthetic, top_char(u)->label()});
    carriers_.emplace(u, h);
    add_descriptor(h, describe(u));
    return h;
  }

  const Cpds& m_;
  ForwardOptions opt_;
  ApproxGraph g_;
  int n_;
  std::deque<std::pair<HeadId, Descriptor>> work_;
  std::unordered_map<Stack, HeadId, StackHash<Stack>> carriers_;
};

inline ApproxGraph build_graph(const Cpds& m, const Configuration& c0, const ForwardOptions& opt = {}) {
  m.validate();
  ForwardBuilder b(m, opt);
  return b.build(c0);
}

// Edges that lead to a head of a target control: the least set containing the
// edges into target heads and every edge into the source of a chosen edge.
inline std::vector<int> back_rules(const ApproxGraph& g, const std::vector<Control>& targets) {
  std::vector<bool> chosen(g.edges().size(), false);
  std::vector<bool> useful(static_cast<std::size_t>(g.num_heads()), false);
  std::vector<std::vector<int>> into(static_cast<std::size_t>(g.num_heads()));
  std::vector<int> todo;
  for (int i = 0; i < static_cast<int>(g.edges().size()); ++i) {
    const GraphEdge& e = g.edges()[static_cast<std::size_t>(i)];
    into[static_cast<std::size_t>(e.to)].push_back(i);
    if (std::find(targets.begin(), targets.end(), g.head(e.to).control) != targets.end()) {
      chosen[static_cast<std::size_t>(i)] = true;
      todo.push_back(i);
    }
  }
  while (!todo.empty()) {
    const int i = todo.back();
    todo.pop_back();
    const HeadId src = g.edges()[static_cast<std::size_t>(i)].from;
    if (useful[static_cast<std::size_t>(src)]) continue;
    useful[static_cast<std::size_t>(src)] = true;
    for (int j : into[static_cast<std::size_t>(src)])
      if (!chosen[static_cast<std::size_t>(j)]) {
        chosen[static_cast<std::size_t>(j)] = true;
        todo.push_back(j);
      }
  }
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(chosen.size()); ++i)
    if (chosen[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

// The guarded CPDS of the rules occurring in `back`.  Pop and collapse rules
// are guarded by the top symbols their graph edges reach; collapse rules keep
// the whole alphabet when the model does not determine link orders.  Guards
// already present in the model are intersected.
inline Cpds extract_guarded(const Cpds& m, const ApproxGraph& g, const std::vector<int>& back,
                            const std::vector<Stack>& initial_stacks = {}) {
  std::set<RuleId> used;
  for (int i : back) used.insert(g.edges()[static_cast<std::size_t>(i)].rule);
  std::map<RuleId, std::set<Symbol>> reached;
  for (const GraphEdge& e : g.edges()) reached[e.rule].insert(g.head(e.to).symbol);
  const bool links_known = m.link_order_determined(initial_stacks);
  Cpds out = m;
  out.rules.clear();
  for (RuleId r : used) {
    Rule rule = m.rules[static_cast<std::size_t>(r)];
    if (!rule.alternating && (rule.op.kind == OpKind::Pop || rule.op.kind == OpKind::Collapse)) {
      std::vector<Symbol> guard;
      if (rule.op.kind == OpKind::Collapse && !links_known) {
        for (Symbol s = 0; s < m.num_symbols(); ++s) guard.push_back(s);
      } else {
        guard.assign(reached[r].begin(), reached[r].end());
      }
      if (rule.op.guard) {
        std::vector<Symbol> both;
        std::set_intersection(guard.begin(), guard.end(), rule.op.guard->begin(), rule.op.guard->end(), std::back_inserter(both));
        guard = both;
      }
      rule.op.guard = guard;
    }
    out.rules.push_back(rule);
  }
  return out;
}

namespace detail {

class DescriptorSemantics {
 public:
  explicit DescriptorSemantics(const ApproxGraph& g) : g_(g), n_(g.order()) {}

  bool member(const Descriptor& d, const Stack& w) {
    Key key{d, w};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const bool out = compute(d, w);
    memo_.emplace(std::move(key), out);
    return out;
  }

 private:
  struct Key {
    Descriptor d;
    Stack w;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = k.w.hash();
      for (HeadId x : k.d) h = hash_mix(h, static_cast<std::size_t>(x + 1));
      return h;
    }
  };

  bool through(const Descriptor& d, int k, HeadId via, const std::optional<Stack>& u) {
    const bool defined = u && top_char(*u);
    if (via == kNoHead) return !defined;
    if (!defined || top_char(*u)->label() != g_.head(via).symbol) return false;
    for (const Descriptor& inner : g_.descriptors(via)) {
      Descriptor combined = inner;
      for (int j = k + 1; j <= n_; ++j) combined[static_cast<std::size_t>(j - 1)] = d[static_cast<std::size_t>(j - 1)];
      if (member(combined, *u)) return true;
    }
    return false;
  }

  bool compute(const Descriptor& d, const Stack& w) {
    for (int k = 1; k <= n_; ++k)
      if (!through(d, k, d[static_cast<std::size_t>(k - 1)], pop(w, k))) return false;
    auto c = top_char(w);
    std::optional<Stack> collapsed;
    int k = n_;
    if (c && c->link()) {
      k = c->link()->order;
      collapsed = collapse(w, k);
    }
    return through(d, k, d[static_cast<std::size_t>(n_)], collapsed);
  }

  const ApproxGraph& g_;
  int n_;
  std::unordered_map<Key, bool, KeyHash> memo_;
};

}  // namespace detail

// Whether the configuration is covered by the graph: its head is in H and
// its stack belongs to the semantics of some descriptor of that head.
inline bool graph_covers(const ApproxGraph& g, const Configuration& c) {
  auto top = top_char(c.stack);
  if (!top) return false;
  auto h = g.find(Head{c.control, top->label()});
  if (!h || !g.in_h(*h)) return false;
  detail::DescriptorSemantics sem(g);
  for (const Descriptor& d : g.descriptors(*h))
    if (sem.member(d, c.stack)) return true;
  return false;
}

inline std::string graph_to_string(const ApproxGraph& g) {
  std::ostringstream os;
  g.dump(os);
  return os.str();
}

}  // namespace cpds
