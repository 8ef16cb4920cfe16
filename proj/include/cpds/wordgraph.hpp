#pragma once

#include <optional>
#include <vector>

#include "cpds/stack.hpp"

namespace cpds {

// Expanded view of a stack as the nested word-graph read by stack automata.
// Every suffix of every list occurrence gets its own node.  Node ids follow
// reading order, so the head, the tail and the collapse destination of a node
// all have larger ids than the node itself.
template <class S>
class WordGraph {
 public:
  using Label = typename S::label_type;

  struct Node {
    int order = 1;        // order of the list this node is a suffix of
    int len = 0;          // children remaining in the suffix; 0 marks the end of the list
    int head = -1;        // order >= 2: node of the first child list
    int next = -1;        // node of the remaining suffix
    std::optional<Label> label;            // order 1: the first character
    std::optional<CollapseLink> link;      // order 1: its link, if any
    int link_target = -1;                  // node of the collapse destination, -1 if unresolved
  };

  explicit WordGraph(const S& w) {
    if (w.order() < 1) return;
    active_.assign(static_cast<std::size_t>(w.order()) + 1, Active{});
    root_ = build(w);
    for (const Pending& p : pending_) {
      const auto& rec = records_[static_cast<std::size_t>(p.record)];
      if (p.index >= 0 && p.index < p.room_len) nodes_[static_cast<std::size_t>(p.node)].link_target = rec[static_cast<std::size_t>(p.index)];
    }
  }

  int root() const { return root_; }
  int order() const { return root_ < 0 ? 0 : nodes_[0].order; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<Node>& nodes() const { return nodes_; }

  // Rebuilds a stack over another label type, mapping each character node.
  template <class T, class F>
  T rebuild(F&& f) const {
    return rebuild_list<T>(root_, f);
  }

 private:
  struct Active {
    int record = -1;
    int len = 0;
  };
  struct Pending {
    int node;
    int record;
    int index;
    int room_len;
  };

  int build(const S& list) {
    const int order = list.order();
    const int m = static_cast<int>(list.length());
    const int rec = static_cast<int>(records_.size());
    records_.emplace_back(static_cast<std::size_t>(m) + 1, -1);
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(m) + 1);
    int pos = 0;
    for (S cur = list; !cur.empty(); cur = cur.tail(), ++pos) {
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(Node{});
      ids.push_back(id);
      const int len = m - pos;
      records_[static_cast<std::size_t>(rec)][static_cast<std::size_t>(len)] = id;
      nodes_[static_cast<std::size_t>(id)].order = order;
      nodes_[static_cast<std::size_t>(id)].len = len;
      const Active saved = active_[static_cast<std::size_t>(order)];
      active_[static_cast<std::size_t>(order)] = Active{rec, len};
      S child = cur.head();
      if (order == 1) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        n.label = child.label();
        n.link = child.link();
        if (n.link && n.link->order >= 1 && n.link->order < static_cast<int>(active_.size())) {
          const Active& a = active_[static_cast<std::size_t>(n.link->order)];
          if (a.record >= 0) pending_.push_back(Pending{id, a.record, n.link->index, a.len});
        }
      } else {
        const int h = build(child);
        nodes_[static_cast<std::size_t>(id)].head = h;
      }
      active_[static_cast<std::size_t>(order)] = saved;
    }
    const int end = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_[static_cast<std::size_t>(end)].order = order;
    nodes_[static_cast<std::size_t>(end)].len = 0;
    records_[static_cast<std::size_t>(rec)][0] = end;
    ids.push_back(end);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) nodes_[static_cast<std::size_t>(ids[i])].next = ids[i + 1];
    return ids.front();
  }

  template <class T, class F>
  T rebuild_list(int id, F& f) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.len == 0) return T::empty(n.order);
    if (n.order == 1) return T::cons(T::character(f(id), n.link), rebuild_list<T>(n.next, f));
    return T::cons(rebuild_list<T>(n.head, f), rebuild_list<T>(n.next, f));
  }

  std::vector<Node> nodes_;
  std::vector<std::vector<int>> records_;
  std::vector<Active> active_;
  std::vector<Pending> pending_;
  int root_ = -1;
};

}  // namespace cpds
