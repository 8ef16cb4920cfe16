#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpds {

inline std::size_t hash_mix(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

// A collapse link <order, index>: the destination keeps the bottom `index`
// order-(order-1) stacks of the enclosing order-`order` stack.
struct CollapseLink {
  int order = 0;
  int index = 0;
  friend bool operator==(const CollapseLink&, const CollapseLink&) = default;
};

// Persistent order-n stack.  An order-0 stack is a labelled character with an
// optional collapse link; an order-k stack (k >= 1) is an immutable cons list
// of order-(k-1) stacks, topmost first.  Nodes are shared between stacks, so
// push_k copies only the spine.
template <class Label, class Hash = std::hash<Label>>
class BasicStack {
 public:
  using label_type = Label;

  BasicStack() : BasicStack(empty(1)) {}

  static BasicStack character(Label label, std::optional<CollapseLink> link = {}) {
    auto n = std::make_shared<Node>();
    n->order = 0;
    std::size_t h = Hash{}(label);
    if (link) h = hash_mix(hash_mix(h, static_cast<std::size_t>(link->order) + 1),
                           static_cast<std::size_t>(link->index));
    n->hash = h;
    n->chars = 1;
    n->label = std::move(label);
    n->link = link;
    return BasicStack(std::move(n));
  }

  static BasicStack empty(int order) {
    if (order < 1) throw std::invalid_argument("empty stack must have order >= 1");
    auto n = std::make_shared<Node>();
    n->order = order;
    n->hash = hash_mix(0x51ed27, static_cast<std::size_t>(order));
    return BasicStack(std::move(n));
  }

  static BasicStack cons(const BasicStack& head, const BasicStack& tail) {
    if (tail.order() < 1 || head.order() != tail.order() - 1)
      throw std::invalid_argument("cons: child order must be one less than the list order");
    auto n = std::make_shared<Node>();
    n->order = tail.order();
    n->head = head.node_;
    n->tail = tail.node_;
    n->length = tail.length() + 1;
    n->chars = head.char_count() + tail.char_count();
    n->nodes = head.node_count() + 1 + tail.node_count();
    n->hash = hash_mix(hash_mix(tail.hash(), head.hash()), 0x7f4a7c15);
    return BasicStack(std::move(n));
  }

  // Builds an order-`order` stack from its children, topmost first.
  static BasicStack from_children(int order, const std::vector<BasicStack>& children) {
    BasicStack s = empty(order);
    for (auto it = children.rbegin(); it != children.rend(); ++it) s = cons(*it, s);
    return s;
  }

  int order() const { return node_->order; }
  bool is_char() const { return node_->order == 0; }
  bool empty() const { return node_->order >= 1 && !node_->head; }
  std::size_t length() const { return node_->length; }
  std::size_t hash() const { return node_->hash; }
  // Number of characters in the stack.
  std::size_t char_count() const { return node_->chars; }
  // Number of non-root nodes: characters plus nested substacks.
  std::size_t node_count() const { return node_->order == 0 ? 0 : node_->nodes; }

  const Label& label() const {
    require_char();
    return *node_->label;
  }
  const std::optional<CollapseLink>& link() const {
    require_char();
    return node_->link;
  }

  BasicStack head() const {
    require_nonempty();
    return BasicStack(node_->head);
  }
  BasicStack tail() const {
    require_nonempty();
    return BasicStack(node_->tail);
  }

  std::vector<BasicStack> children() const {
    std::vector<BasicStack> out;
    if (is_char()) return out;
    out.reserve(length());
    for (BasicStack s = *this; !s.empty(); s = s.tail()) out.push_back(s.head());
    return out;
  }

  // Suffix of a list keeping its last `count` children.
  BasicStack suffix(std::size_t count) const {
    if (is_char() || count > length()) throw std::out_of_range("suffix");
    BasicStack s = *this;
    for (std::size_t drop = length() - count; drop > 0; --drop) s = s.tail();
    return s;
  }

  bool same_node(const BasicStack& other) const { return node_ == other.node_; }

  friend bool operator==(const BasicStack& a, const BasicStack& b) {
    const Node* x = a.node_.get();
    const Node* y = b.node_.get();
    while (true) {
      if (x == y) return true;
      if (x->order != y->order || x->hash != y->hash || x->length != y->length) return false;
      if (x->order == 0) return *x->label == *y->label && x->link == y->link;
      if (!x->head) return !y->head;
      if (!(BasicStack(x->head) == BasicStack(y->head))) return false;
      x = x->tail.get();
      y = y->tail.get();
    }
  }
  friend bool operator!=(const BasicStack& a, const BasicStack& b) { return !(a == b); }

 private:
  struct Node {
    int order = 0;
    std::size_t hash = 0;
    std::size_t length = 0;
    std::size_t chars = 0;
    std::size_t nodes = 0;
    std::optional<Label> label;
    std::optional<CollapseLink> link;
    std::shared_ptr<const Node> head;
    std::shared_ptr<const Node> tail;
  };

  explicit BasicStack(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  void require_char() const {
    if (node_->order != 0) throw std::logic_error("not a character");
  }
  void require_nonempty() const {
    if (node_->order == 0 || !node_->head) throw std::logic_error("empty or order-0 stack");
  }

  std::shared_ptr<const Node> node_;
};

template <class S>
struct StackHash {
  std::size_t operator()(const S& s) const { return s.hash(); }
};

// top_k: the topmost order-(k-1) constituent.  top_k of an empty order-k stack
// is the empty order-(k-1) stack, except at k = 1 where there is no character.
template <class S>
std::optional<S> top(const S& w, int k) {
  if (k < 1 || k > w.order()) return std::nullopt;
  S cur = w;
  while (cur.order() > k) {
    if (cur.empty()) return std::nullopt;
    cur = cur.head();
  }
  if (cur.empty()) {
    if (k == 1) return std::nullopt;
    return S::empty(k - 1);
  }
  return cur.head();
}

// The top character, when every enclosing topmost stack is non-empty.
template <class S>
std::optional<S> top_char(const S& w) {
  if (w.order() < 1) return std::nullopt;
  return top(w, 1);
}

// bottom_k^i: keeps the last i children of the topmost order-k stack.
template <class S>
std::optional<S> bottom(const S& w, int k, int i) {
  if (k < 1 || k > w.order() || i < 0) return std::nullopt;
  if (w.order() == k) {
    if (w.empty() || static_cast<std::size_t>(i) > w.length()) return std::nullopt;
    return w.suffix(static_cast<std::size_t>(i));
  }
  if (w.empty()) return std::nullopt;
  auto inner = bottom(w.head(), k, i);
  if (!inner) return std::nullopt;
  return S::cons(*inner, w.tail());
}

// u :_k v: places the order-(k-1) stack u on top of the topmost order-k stack of v.
template <class S>
std::optional<S> compose(const S& u, int k, const S& v) {
  if (k < 1 || k > v.order() || u.order() != k - 1) return std::nullopt;
  if (v.order() == k) return S::cons(u, v);
  if (v.empty()) return std::nullopt;
  auto inner = compose(u, k, v.head());
  if (!inner) return std::nullopt;
  return S::cons(*inner, v.tail());
}

namespace detail {
// Rebuilds the spine of w down to its topmost order-k stack, replacing that
// stack by f(topmost).  Returns nullopt when the spine is empty or f fails.
template <class S, class F>
std::optional<S> update_topmost(const S& w, int k, F&& f) {
  if (w.order() == k) return f(w);
  if (w.empty()) return std::nullopt;
  auto inner = update_topmost(w.head(), k, f);
  if (!inner) return std::nullopt;
  return S::cons(*inner, w.tail());
}
}  // namespace detail

template <class S>
std::optional<S> pop(const S& w, int k) {
  if (k < 1 || k > w.order()) return std::nullopt;
  return detail::update_topmost(w, k, [](const S& s) -> std::optional<S> {
    if (s.empty()) return std::nullopt;
    S u = s.head();
    if (!u.is_char() && u.empty()) return std::nullopt;
    return s.tail();
  });
}

template <class S>
std::optional<S> push(const S& w, int k) {
  if (k < 2 || k > w.order()) return std::nullopt;
  return detail::update_topmost(w, k, [](const S& s) -> std::optional<S> {
    if (s.empty()) return std::nullopt;
    return S::cons(s.head(), s);
  });
}

template <class S>
std::optional<S> collapse(const S& w, int k) {
  auto c = top_char(w);
  if (!c || !c->link() || c->link()->order != k) return std::nullopt;
  return bottom(w, k, c->link()->index);
}

// push_b^k: places b^<k, m-1> on top, where the topmost order-k stack has m children.
template <class S>
std::optional<S> push_char(const S& w, const typename S::label_type& b, int k) {
  if (k < 1 || k > w.order() || !top_char(w)) return std::nullopt;
  S cur = w;
  while (cur.order() > k) cur = cur.head();
  const int m = static_cast<int>(cur.length());
  return compose(S::character(b, CollapseLink{k, m - 1}), 1, w);
}

// rew_b: replaces the top character's label, keeping its link.
template <class S>
std::optional<S> rew(const S& w, const typename S::label_type& b) {
  auto c = top_char(w);
  if (!c) return std::nullopt;
  return detail::update_topmost(w, 1, [&](const S& s) -> std::optional<S> {
    return S::cons(S::character(b, s.head().link()), s.tail());
  });
}

// Checks structural invariants: child orders, link orders within [1, n], and
// link destinations that lie strictly below the character's own branch.
template <class S>
std::optional<std::string> validate_stack(const S& w, int n) {
  if (w.order() != n) return "stack order " + std::to_string(w.order()) + " differs from " + std::to_string(n);
  // room[k] = number of order-(k-1) stacks strictly below the current branch
  // inside the enclosing order-k stack.
  std::vector<int> room(static_cast<std::size_t>(n) + 1, 0);
  std::optional<std::string> error;
  std::function<void(const S&)> walk = [&](const S& s) {
    if (error) return;
    if (s.is_char()) {
      if (auto l = s.link()) {
        if (l->order < 1 || l->order > n)
          error = "link order " + std::to_string(l->order) + " out of range";
        else if (l->index < 0 || l->index > room[static_cast<std::size_t>(l->order)])
          error = "link index " + std::to_string(l->index) + " does not point below its branch";
      }
      return;
    }
    int remaining = static_cast<int>(s.length());
    for (S cur = s; !cur.empty(); cur = cur.tail()) {
      --remaining;
      S child = cur.head();
      if (child.order() != s.order() - 1) {
        error = "child order mismatch";
        return;
      }
      const int saved = room[static_cast<std::size_t>(s.order())];
      room[static_cast<std::size_t>(s.order())] = remaining;
      walk(child);
      room[static_cast<std::size_t>(s.order())] = saved;
      if (error) return;
    }
  };
  walk(w);
  return error;
}

template <class S, class LabelPrinter>
void print_stack(std::ostream& os, const S& w, const LabelPrinter& print_label) {
  if (w.is_char()) {
    print_label(os, w.label());
    if (auto l = w.link()) os << "^(" << l->order << ',' << l->index << ')';
    return;
  }
  os << '[';
  bool first = true;
  for (const S& c : w.children()) {
    if (!first && w.order() == 1) os << ' ';
    first = false;
    print_stack(os, c, print_label);
  }
  os << ']';
}

template <class S, class LabelPrinter>
std::string stack_to_string(const S& w, const LabelPrinter& print_label) {
  std::ostringstream os;
  print_stack(os, w, print_label);
  return os.str();
}

}  // namespace cpds
