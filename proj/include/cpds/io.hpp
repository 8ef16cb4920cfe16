#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpds/automaton.hpp"
#include "cpds/model.hpp"
#include "cpds/saturation.hpp"
#include "cpds/stack.hpp"

namespace cpds {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

// Character cursor over one line with column tracking (columns are 1-based).
class Cursor {
 public:
  Cursor(std::string_view text, int line, int column = 1) : text_(text), line_(line), base_(column) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, column(), msg); }
  int column() const { return base_ + static_cast<int>(pos_); }
  // Column of the next token.
  int token_column() {
    skip_ws();
    return column();
  }
  int line() const { return line_; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  bool accept(std::string_view s) {
    skip_ws();
    if (text_.substr(pos_, s.size()) != s) return false;
    pos_ += s.size();
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  void expect(std::string_view s) {
    if (!accept(s)) fail("expected '" + std::string(s) + "'");
  }
  std::string ident(const char* what = "identifier") {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (start == pos_) fail(std::string("expected ") + what);
    return std::string(text_.substr(start, pos_ - start));
  }
  int integer(const char* what = "integer") {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_ || pos_ - start > 9) {
      pos_ = start;
      fail(std::string("expected ") + what);
    }
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }
  void expect_end() {
    if (!at_end()) fail("unexpected trailing text");
  }
  std::string_view rest() {
    skip_ws();
    return text_.substr(pos_);
  }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view text_;
  int line_;
  int base_;
  std::size_t pos_ = 0;
};

// Splits text into lines with '#' comments removed.
inline std::vector<std::pair<int, std::string>> logical_lines(std::string_view text) {
  std::vector<std::pair<int, std::string>> out;
  int line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line;
    std::string l(text.substr(start, end - start));
    if (auto h = l.find('#'); h != std::string::npos) l.erase(h);
    if (!l.empty() && l.back() == '\r') l.pop_back();
    out.emplace_back(line, std::move(l));
    start = end + 1;
  }
  return out;
}

// Stack literal parser.  With default links, characters without an explicit
// link receive their declared link order and point just below their branch.
class StackParser {
 public:
  StackParser(Cursor& cur, const Cpds& m, bool default_links) : cur_(cur), m_(m), default_links_(default_links) {}

  Stack parse() {
    if (cur_.peek() != '[') cur_.fail("expected '[' to start a stack");
    Stack s = parse_list();
    return s;
  }

 private:
  // Parses a bracketed list and returns a stack of the order given by the
  // nesting depth below it.
  Stack parse_list() {
    cur_.expect('[');
    struct Item {
      bool is_char;
      Stack stack;
      std::string symbol;
      std::optional<CollapseLink> link;
      int line, column;
    };
    std::vector<Item> items;
    while (!cur_.accept(']')) {
      if (cur_.at_end()) cur_.fail("unterminated stack literal");
      if (cur_.peek() == '[') {
        items.push_back(Item{false, parse_list(), {}, {}, cur_.line(), cur_.column()});
        continue;
      }
      const int col = cur_.column();
      std::string sym = cur_.ident("symbol");
      std::optional<CollapseLink> link;
      if (cur_.accept('^')) {
        cur_.expect('(');
        int k = cur_.integer("link order");
        cur_.expect(',');
        int i = cur_.integer("link index");
        cur_.expect(')');
        link = CollapseLink{k, i};
      }
      items.push_back(Item{true, Stack(), sym, link, cur_.line(), col});
    }
    if (items.empty()) {
      // Empty lists are order 1 unless enclosed in a context fixing their order;
      // the caller repairs the order via fix_order.
      return Stack::empty(1);
    }
    const bool chars = items.front().is_char;
    for (const Item& it : items)
      if (it.is_char != chars) throw ParseError(it.line, it.column, "characters and substacks mixed in one stack");
    std::vector<Stack> children;
    if (chars) {
      const int below_total = static_cast<int>(items.size());
      for (int idx = 0; idx < below_total; ++idx) {
        const Item& it = items[static_cast<std::size_t>(idx)];
        const Symbol s = m_.symbol(it.symbol);
        if (s < 0) throw ParseError(it.line, it.column, "undeclared symbol '" + it.symbol + "'");
        std::optional<CollapseLink> link = it.link;
        if (!link && default_links_) {
          auto d = m_.declared_link_order.find(s);
          if (d != m_.declared_link_order.end()) link = CollapseLink{d->second, -1};
        }
        children.push_back(Stack::character(s, link));
      }
      return Stack::from_children(1, children);
    }
    int child_order = 0;
    for (const Item& it : items) child_order = std::max(child_order, it.stack.order());
    for (Item& it : items) {
      Stack c = it.stack;
      if (c.order() != child_order) {
        if (!c.empty()) throw ParseError(it.line, it.column, "substacks of different orders");
        c = Stack::empty(child_order);
      }
      children.push_back(c);
    }
    return Stack::from_children(child_order + 1, children);
  }

  Cursor& cur_;
  const Cpds& m_;
  bool default_links_;
};

// Fills in links marked with index -1 so they point just below their branch.
inline Stack resolve_default_links(const Stack& w, std::vector<int>& room) {
  if (w.is_char()) {
    auto l = w.link();
    if (l && l->index < 0) return Stack::character(w.label(), CollapseLink{l->order, room[static_cast<std::size_t>(l->order)]});
    return w;
  }
  std::vector<Stack> children;
  int remaining = static_cast<int>(w.length());
  for (const Stack& c : w.children()) {
    --remaining;
    const int saved = room[static_cast<std::size_t>(w.order())];
    room[static_cast<std::size_t>(w.order())] = remaining;
    children.push_back(resolve_default_links(c, room));
    room[static_cast<std::size_t>(w.order())] = saved;
  }
  return Stack::from_children(w.order(), children);
}

// Rebuilds empty lists at the orders required by the enclosing stack.
inline Stack fix_order(const Stack& w, int order) {
  if (w.is_char()) return w;
  if (w.empty()) return Stack::empty(order);
  std::vector<Stack> children;
  for (const Stack& c : w.children()) children.push_back(fix_order(c, order - 1));
  return Stack::from_children(order, children);
}

}  // namespace detail

// Parses a stack literal such as [[a^(2,2) b][c][d]] of the given order.
inline Stack parse_stack_at(detail::Cursor& cur, const Cpds& m, int order, bool default_links) {
  const int col = cur.token_column();
  detail::StackParser p(cur, m, default_links);
  Stack s = p.parse();
  if (s.order() > order) throw ParseError(cur.line(), col, "stack has order " + std::to_string(s.order()) + ", expected " + std::to_string(order));
  if (s.order() < order) {
    if (!s.empty()) throw ParseError(cur.line(), col, "stack has order " + std::to_string(s.order()) + ", expected " + std::to_string(order));
  }
  s = detail::fix_order(s, order);
  if (default_links) {
    std::vector<int> room(static_cast<std::size_t>(order) + 1, 0);
    s = detail::resolve_default_links(s, room);
  }
  if (auto err = validate_stack(s, order)) throw ParseError(cur.line(), col, *err);
  return s;
}

inline Stack parse_stack(std::string_view text, const Cpds& m, int order = -1, bool default_links = false) {
  detail::Cursor cur(text, 1);
  if (order < 0) order = m.order;
  Stack s = parse_stack_at(cur, m, order, default_links);
  cur.expect_end();
  return s;
}

inline std::string format_stack(const Stack& w, const Cpds& m) { return m.stack_string(w); }

// A model file: the system, its initial configuration and the target controls.
struct ModelFile {
  Cpds model;
  std::optional<Configuration> init;
  std::vector<Control> targets;
};

namespace detail {

inline std::vector<std::string> parse_name_set(Cursor& cur, const char* what) {
  std::vector<std::string> out;
  cur.expect('{');
  if (cur.accept('}')) return out;
  do {
    out.push_back(cur.ident(what));
  } while (cur.accept(','));
  cur.expect('}');
  return out;
}

}  // namespace detail

// Parses the model format:
//   order N / alphabet a b c / linkorder a=2 / controls p q / init p [[a]] /
//   target p q / rule p a OP p' [guard {a,b}] / alt p {p1,p2}
// where OP is pop k, push k, collapse k, cpush b k or rew b.
inline ModelFile parse_model(std::string_view text) {
  ModelFile mf;
  Cpds& m = mf.model;
  bool have_order = false;
  bool have_alphabet = false;
  struct PendingInit {
    int line;
    std::string text;
    int column;
    std::string control;
  };
  std::optional<PendingInit> init;
  std::vector<std::pair<int, std::string>> target_names;

  for (auto& [line, content] : detail::logical_lines(text)) {
    detail::Cursor cur(content, line);
    if (cur.at_end()) continue;
    const int kw_col = cur.token_column();
    const std::string kw = cur.ident("keyword");
    auto need_header = [&]() {
      if (!have_order) throw ParseError(line, kw_col, "'order' must come first");
      if (!have_alphabet) throw ParseError(line, kw_col, "'alphabet' must be declared before '" + kw + "'");
    };
    auto symbol = [&](const char* what) {
      const int col = cur.token_column();
      std::string name = cur.ident(what);
      Symbol s = m.symbol(name);
      if (s < 0) throw ParseError(line, col, "undeclared symbol '" + name + "'");
      return s;
    };
    auto order_arg = [&](const char* what, int lo) {
      const int col = cur.token_column();
      int k = cur.integer(what);
      if (k < lo || k > m.order)
        throw ParseError(line, col, std::string(what) + " " + std::to_string(k) + " out of range [" + std::to_string(lo) + ", " + std::to_string(m.order) + "]");
      return k;
    };
    if (kw == "order") {
      if (have_order) throw ParseError(line, kw_col, "duplicate 'order'");
      const int col = cur.token_column();
      m.order = cur.integer("order");
      if (m.order < 1) throw ParseError(line, col, "order must be at least 1");
      have_order = true;
      cur.expect_end();
    } else if (kw == "alphabet") {
      if (!have_order) throw ParseError(line, kw_col, "'order' must come first");
      if (have_alphabet) throw ParseError(line, kw_col, "duplicate 'alphabet'");
      while (!cur.at_end()) {
        const int col = cur.token_column();
        std::string s = cur.ident("symbol");
        if (m.symbol(s) >= 0) throw ParseError(line, col, "duplicate symbol '" + s + "'");
        m.alphabet.push_back(s);
      }
      if (m.alphabet.empty()) throw ParseError(line, cur.column(), "alphabet is empty");
      have_alphabet = true;
    } else if (kw == "linkorder") {
      need_header();
      while (!cur.at_end()) {
        Symbol s = symbol("symbol");
        cur.expect('=');
        int k = order_arg("link order", 1);
        auto [it, inserted] = m.declared_link_order.emplace(s, k);
        if (!inserted && it->second != k) cur.fail("conflicting link orders for '" + m.symbol_name(s) + "'");
      }
    } else if (kw == "controls") {
      while (!cur.at_end()) m.add_control(cur.ident("control"));
    } else if (kw == "init") {
      need_header();
      if (init) throw ParseError(line, kw_col, "duplicate 'init'");
      std::string control = cur.ident("control");
      cur.skip_ws();
      const int col = cur.token_column();
      init = PendingInit{line, std::string(cur.rest()), col, control};
      m.add_control(control);
    } else if (kw == "target") {
      while (!cur.at_end()) {
        std::string c = cur.ident("control");
        target_names.emplace_back(line, c);
        m.add_control(c);
      }
    } else if (kw == "rule") {
      need_header();
      Rule r;
      r.from = m.add_control(cur.ident("control"));
      r.symbol = symbol("symbol");
      const int op_col = cur.token_column();
      const std::string op = cur.ident("operation");
      if (op == "pop") {
        r.op = Operation{OpKind::Pop, order_arg("pop order", 1), -1, {}};
      } else if (op == "push") {
        r.op = Operation{OpKind::Push, order_arg("push order", 2), -1, {}};
      } else if (op == "collapse") {
        r.op = Operation{OpKind::Collapse, order_arg("collapse order", 2), -1, {}};
      } else if (op == "cpush") {
        Symbol b = symbol("pushed symbol");
        r.op = Operation{OpKind::PushChar, order_arg("link order", 1), b, {}};
      } else if (op == "rew") {
        r.op = Operation{OpKind::Rew, 0, symbol("symbol"), {}};
      } else {
        throw ParseError(line, op_col, "unknown operation '" + op + "'");
      }
      r.to = m.add_control(cur.ident("control"));
      if (cur.accept("guard")) {
        if (r.op.kind != OpKind::Pop && r.op.kind != OpKind::Collapse)
          cur.fail("only pop and collapse may carry a guard");
        std::vector<Symbol> g;
        cur.expect('{');
        if (!cur.accept('}')) {
          do g.push_back(symbol("guard symbol"));
          while (cur.accept(','));
          cur.expect('}');
        }
        r.op.guard = g;
      }
      cur.expect_end();
      if (r.op.kind == OpKind::PushChar) {
        auto d = m.declared_link_order.find(r.op.symbol);
        if (d != m.declared_link_order.end() && d->second != r.op.order)
          throw ParseError(line, op_col, "pushes '" + m.symbol_name(r.op.symbol) + "' with link order " + std::to_string(r.op.order) +
                                             " but its declared link order is " + std::to_string(d->second));
      }
      m.add_rule(std::move(r));
    } else if (kw == "alt") {
      need_header();
      Rule r;
      r.alternating = true;
      r.from = m.add_control(cur.ident("control"));
      const int col = cur.token_column();
      for (const std::string& c : detail::parse_name_set(cur, "control")) r.targets.push_back(m.add_control(c));
      if (r.targets.empty()) throw ParseError(line, col, "alternating rule with no targets");
      cur.expect_end();
      m.add_rule(std::move(r));
    } else {
      throw ParseError(line, kw_col, "unknown keyword '" + kw + "'");
    }
  }
  if (!have_order) throw ParseError(1, 1, "missing 'order'");
  if (!have_alphabet) throw ParseError(1, 1, "missing 'alphabet'");
  if (init) {
    detail::Cursor cur(init->text, init->line, init->column);
    Stack s = parse_stack_at(cur, m, m.order, true);
    cur.expect_end();
    if (!top_char(s)) throw ParseError(init->line, init->column, "initial stack has no top character");
    mf.init = Configuration{m.control(init->control), s};
  }
  for (auto& [line, name] : target_names) {
    Control c = m.control(name);
    if (std::find(mf.targets.begin(), mf.targets.end(), c) == mf.targets.end()) mf.targets.push_back(c);
  }
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw ParseError(1, 1, e.what());
  }
  return mf;
}

inline std::string op_string(const Cpds& m, const Operation& op) {
  std::string s;
  switch (op.kind) {
    case OpKind::Pop: s = "pop " + std::to_string(op.order); break;
    case OpKind::Push: s = "push " + std::to_string(op.order); break;
    case OpKind::Collapse: s = "collapse " + std::to_string(op.order); break;
    case OpKind::PushChar: s = "cpush " + m.symbol_name(op.symbol) + " " + std::to_string(op.order); break;
    case OpKind::Rew: s = "rew " + m.symbol_name(op.symbol); break;
  }
  return s;
}

inline std::string rule_string(const Cpds& m, const Rule& r) {
  if (r.alternating) {
    std::string s = "alt " + m.control_name(r.from) + " {";
    for (std::size_t i = 0; i < r.targets.size(); ++i) s += (i ? "," : "") + m.control_name(r.targets[i]);
    return s + "}";
  }
  std::string s = "rule " + m.control_name(r.from) + " " + m.symbol_name(r.symbol) + " " + op_string(m, r.op) + " " + m.control_name(r.to);
  if (r.op.guard) {
    s += " guard {";
    for (std::size_t i = 0; i < r.op.guard->size(); ++i) s += (i ? "," : "") + m.symbol_name((*r.op.guard)[i]);
    s += "}";
  }
  return s;
}

inline void write_model(std::ostream& os, const ModelFile& mf) {
  const Cpds& m = mf.model;
  os << "order " << m.order << "\nalphabet";
  for (const auto& a : m.alphabet) os << ' ' << a;
  os << '\n';
  if (!m.declared_link_order.empty()) {
    os << "linkorder";
    for (auto& [s, k] : m.declared_link_order) os << ' ' << m.symbol_name(s) << '=' << k;
    os << '\n';
  }
  os << "controls";
  for (const auto& c : m.controls) os << ' ' << c;
  os << '\n';
  if (mf.init) os << "init " << m.control_name(mf.init->control) << ' ' << m.stack_string(mf.init->stack) << '\n';
  if (!mf.targets.empty()) {
    os << "target";
    for (Control c : mf.targets) os << ' ' << m.control_name(c);
    os << '\n';
  }
  for (const Rule& r : m.rules) os << rule_string(m, r) << '\n';
}

inline std::string model_to_string(const ModelFile& mf) {
  std::ostringstream os;
  write_model(os, mf);
  return os.str();
}

// Parses the automaton format, one long-form transition per line:
//   qS -- a / {b1,b2} --> ({q1};{q2})
// with target sets listed from order 1 upwards (separated by ';' or ','), plus
//   final k: q1 q2      and      state k: q1 q2
// Control states are the states named after the model's controls.
inline StackAutomaton parse_automaton(std::string_view text, const Cpds& m) {
  struct Line {
    int line;
    int column;
    std::string source;
    Symbol symbol;
    std::vector<std::pair<int, std::string>> branch;  // column, name
    std::vector<std::vector<std::pair<int, std::string>>> targets;
  };
  std::vector<Line> trans;
  std::map<std::string, int> orders;
  std::vector<std::string> order_of_appearance;
  std::set<std::string> seen;
  std::vector<std::string> finals;
  auto note = [&](const std::string& name, int k, int line, int col) {
    auto [it, inserted] = orders.emplace(name, k);
    if (seen.insert(name).second) order_of_appearance.push_back(name);
    if (!inserted && it->second != k)
      throw ParseError(line, col, "state '" + name + "' used at order " + std::to_string(k) + " and " + std::to_string(it->second));
  };
  auto mention = [&](const std::string& name) {
    if (seen.insert(name).second) order_of_appearance.push_back(name);
  };
  std::vector<std::tuple<std::string, int, int>> unresolved;  // branch states, checked after inference

  for (auto& [line, content] : detail::logical_lines(text)) {
    detail::Cursor cur(content, line);
    if (cur.at_end()) continue;
    const int col = cur.token_column();
    const std::string first = cur.ident("state or keyword");
    if ((first == "final" || first == "state") && cur.peek() != '-') {
      const int kcol = cur.token_column();
      int k = cur.integer("order");
      if (k < 1 || k > m.order) throw ParseError(line, kcol, "order out of range");
      cur.expect(':');
      while (!cur.at_end()) {
        const int ncol = cur.token_column();
        std::string name = cur.ident("state");
        note(name, k, line, ncol);
        if (first == "final") finals.push_back(name);
      }
      continue;
    }
    Line l{line, col, first, -1, {}, {}};
    cur.expect("--");
    const int scol = cur.token_column();
    std::string sym = cur.ident("symbol");
    l.symbol = m.symbol(sym);
    if (l.symbol < 0) throw ParseError(line, scol, "undeclared symbol '" + sym + "'");
    cur.expect('/');
    cur.expect('{');
    if (!cur.accept('}')) {
      do {
        const int ncol = cur.token_column();
        l.branch.emplace_back(ncol, cur.ident("state"));
      } while (cur.accept(','));
      cur.expect('}');
    }
    cur.expect("-->");
    cur.expect('(');
    do {
      std::vector<std::pair<int, std::string>> set;
      cur.expect('{');
      if (!cur.accept('}')) {
        do {
          const int ncol = cur.token_column();
          set.emplace_back(ncol, cur.ident("state"));
        } while (cur.accept(','));
        cur.expect('}');
      }
      l.targets.push_back(std::move(set));
    } while (cur.accept(';') || cur.accept(','));
    cur.expect(')');
    cur.expect_end();
    const int k = static_cast<int>(l.targets.size());
    if (k > m.order) throw ParseError(line, col, "transition has " + std::to_string(k) + " target sets but the order is " + std::to_string(m.order));
    note(l.source, k, line, col);
    for (int j = 1; j <= k; ++j)
      for (auto& [ncol, name] : l.targets[static_cast<std::size_t>(j - 1)]) note(name, j, line, ncol);
    for (auto& [ncol, name] : l.branch) {
      mention(name);
      unresolved.emplace_back(name, line, ncol);
    }
    trans.push_back(std::move(l));
  }
  for (auto& [name, line, col] : unresolved)
    if (!orders.count(name)) throw ParseError(line, col, "cannot infer the order of state '" + name + "'");

  StackAutomaton a(m.order, m.num_symbols());
  for (Control c = 0; c < m.num_controls(); ++c) {
    auto it = orders.find(m.control_name(c));
    if (it != orders.end() && it->second != m.order)
      throw ParseError(1, 1, "control state '" + m.control_name(c) + "' must have order " + std::to_string(m.order));
  }
  for (const std::string& name : order_of_appearance) {
    a.add_state(orders.at(name), name);
    const Control c = m.control(name);
    if (c >= 0) a.ensure_control_state(c, name);
  }
  for (const std::string& f : finals) a.set_final(a.find_state(f));
  for (const Line& l : trans) {
    LongForm lf;
    lf.source = a.find_state(l.source);
    lf.symbol = l.symbol;
    for (auto& [c, name] : l.branch) lf.branch.push_back(a.find_state(name));
    normalize(lf.branch);
    for (const auto& set : l.targets) {
      StateSet s;
      for (auto& [c, name] : set) s.push_back(a.find_state(name));
      normalize(s);
      lf.targets.push_back(std::move(s));
    }
    try {
      a.add_long(lf, Justification{});
    } catch (const AutomatonError& e) {
      throw ParseError(l.line, l.column, e.what());
    }
  }
  return a;
}

inline std::string justification_string(const StackAutomaton& a, const Cpds& m, const Justification& j) {
  auto tname = [&](TransId t) { return "t" + std::to_string(t); };
  std::string s;
  switch (j.kind) {
    case JustKind::Initial: return "initial";
    case JustKind::Rule: s = m.rules[static_cast<std::size_t>(j.rule)].name; break;
    case JustKind::RuleTrans: s = m.rules[static_cast<std::size_t>(j.rule)].name + " " + tname(j.trans); break;
    case JustKind::RuleSet:
    case JustKind::RuleTransSet: {
      s = m.rules[static_cast<std::size_t>(j.rule)].name;
      if (j.kind == JustKind::RuleTransSet) s += " " + tname(j.trans);
      s += " {";
      for (std::size_t i = 0; i < j.set.size(); ++i) s += (i ? "," : "") + tname(j.set[i]);
      s += "}";
      break;
    }
  }
  (void)a;
  return s + " step " + std::to_string(j.step);
}

inline std::string long_form_string(const StackAutomaton& a, const Cpds& m, const LongForm& lf) {
  return long_form_string_plain(a, m, lf);
}

// Writes every long-form transition (order-1 transition id in a comment, with
// its justification), then the state and final declarations.
inline void write_automaton(std::ostream& os, const StackAutomaton& a, const Cpds& m, bool with_justifications = false) {
  for (int k = 1; k <= a.order(); ++k) {
    std::vector<std::string> names;
    for (StateId q = 0; q < a.num_states(); ++q)
      if (!a.is_minted(q) && a.state(q).order == k) names.push_back(a.state_name(q));
    if (names.empty()) continue;
    os << "state " << k << ":";
    for (auto& n : names) os << ' ' << n;
    os << '\n';
  }
  for (TransId t = 0; t < a.num_transitions(); ++t) {
    os << long_form_string(a, m, a.long_form(t));
    if (with_justifications) os << "  # t" << t << ": " << justification_string(a, m, a.transition(t).just);
    os << '\n';
  }
  for (int k = 1; k <= a.order(); ++k) {
    StateSet f = a.finals(k);
    if (f.empty()) continue;
    os << "final " << k << ":";
    for (StateId q : f) os << ' ' << a.state_name(q);
    os << '\n';
  }
}

inline std::string automaton_to_string(const StackAutomaton& a, const Cpds& m, bool with_justifications = false) {
  std::ostringstream os;
  write_automaton(os, a, m, with_justifications);
  return os.str();
}

}  // namespace cpds
