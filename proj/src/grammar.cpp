#include "lvsp/grammar.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace lvsp {

const std::string& WeightedCFG::symbol_name(SymbolId s) const {
  return names_[static_cast<std::size_t>(s)];
}

SymbolId WeightedCFG::find_symbol(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<SymbolId>(i);
  }
  return -1;
}

int WeightedCFG::dim(SymbolId nonterminal) const {
  int d = dims_[static_cast<std::size_t>(nonterminal)];
  if (d <= 0) {
    throw InternalError("dim() asked for terminal '" + symbol_name(nonterminal) + "'");
  }
  return d;
}

const std::vector<RuleId>& WeightedCFG::rules_with_lhs(SymbolId nt) const {
  return by_lhs_[static_cast<std::size_t>(nt)];
}

void WeightedCFG::set_weight(RuleId r, Tensor w) {
  if (&w.ring() != ring_) {
    throw PartialOpError("set_weight: tensor semiring does not match grammar");
  }
  weights_[static_cast<std::size_t>(r)] = std::move(w);
}

Shape WeightedCFG::expected_weight_shape(const Rule& r) const {
  Shape shape;
  for (SymbolId s : r.rhs) {
    if (is_nonterminal(s)) shape.push_back(dim(s));
  }
  shape.push_back(dim(r.lhs));
  return shape;
}

std::vector<int> WeightedCFG::rhs_nonterminal_positions(const Rule& r) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    if (is_nonterminal(r.rhs[i])) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string WeightedCFG::render_rule(RuleId r) const {
  const Rule& rr = rule(r);
  std::string out = symbol_name(rr.lhs) + " ->";
  for (SymbolId s : rr.rhs) out += " " + symbol_name(s);
  return out;
}

std::vector<SymbolId> WeightedCFG::to_symbols(std::span<const std::string> tokens) const {
  std::vector<SymbolId> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    SymbolId s = find_symbol(tok);
    if (s < 0) throw SentenceError("unknown terminal '" + tok + "'");
    if (is_nonterminal(s)) {
      throw SentenceError("'" + tok + "' is a nonterminal, sentences are terminal strings");
    }
    out.push_back(s);
  }
  return out;
}

// --- builder -----------------------------------------------------------

GrammarBuilder& GrammarBuilder::set_start(const std::string& name) {
  start_ = name;
  return *this;
}

GrammarBuilder& GrammarBuilder::dim(const std::string& name, int d) {
  dims_.emplace_back(name, d);
  return *this;
}

GrammarBuilder& GrammarBuilder::rule(const std::string& lhs,
                                     const std::vector<std::string>& rhs,
                                     std::vector<Value> flat_values) {
  rules_.push_back({lhs, rhs, std::move(flat_values)});
  return *this;
}

SymbolId GrammarBuilder::intern(WeightedCFG& g, const std::string& name) const {
  SymbolId s = g.find_symbol(name);
  if (s >= 0) return s;
  g.names_.push_back(name);
  g.dims_.push_back(-1);
  g.by_lhs_.emplace_back();
  return static_cast<SymbolId>(g.names_.size() - 1);
}

WeightedCFG GrammarBuilder::build(bool strict) const {
  WeightedCFG g;
  g.ring_ = ring_;
  for (const auto& [name, d] : dims_) {
    if (d <= 0) throw ConfigError("dim of '" + name + "' must be positive");
    SymbolId s = intern(g, name);
    if (g.dims_[static_cast<std::size_t>(s)] > 0) {
      throw ConfigError("duplicate dim declaration for '" + name + "'");
    }
    g.dims_[static_cast<std::size_t>(s)] = d;
  }
  if (start_.empty()) throw ConfigError("no start symbol set");
  g.start_ = intern(g, start_);
  if (!g.is_nonterminal(g.start_)) {
    throw ConfigError("start symbol '" + start_ + "' has no dim declaration");
  }

  std::set<std::pair<SymbolId, std::vector<SymbolId>>> seen;
  for (const auto& pr : rules_) {
    if (pr.rhs.empty()) {
      throw ConfigError("rule for '" + pr.lhs + "' has an empty right-hand side");
    }
    Rule r;
    r.id = static_cast<RuleId>(g.rules_.size());
    r.lhs = intern(g, pr.lhs);
    if (!g.is_nonterminal(r.lhs)) {
      throw ConfigError("rule lhs '" + pr.lhs + "' has no dim declaration");
    }
    for (const auto& name : pr.rhs) r.rhs.push_back(intern(g, name));
    if (!seen.insert({r.lhs, r.rhs}).second) {
      throw ConfigError("duplicate rule '" + pr.lhs + " -> ...'");
    }

    std::vector<Value> values;
    values.reserve(pr.values.size());
    for (const Value& v : pr.values) values.push_back(ring_->attach_rule(v, r.id));

    Shape expected = g.expected_weight_shape(r);
    std::size_t need = 1;
    for (int d : expected) need *= static_cast<std::size_t>(d);
    // Wrong-sized literals are kept as flat rank-1 tensors (empty ones as a
    // rank-0 zero) so lenient callers can report the mismatch.
    const Shape flat{static_cast<int>(values.size())};
    Tensor w = values.size() == need
                   ? Tensor(*ring_, expected, std::move(values))
                   : (values.empty()
                          ? scalar_tensor(*ring_, ring_->zero())
                          : Tensor(*ring_, flat, std::move(values)));
    g.by_lhs_[static_cast<std::size_t>(r.lhs)].push_back(r.id);
    g.rules_.push_back(std::move(r));
    g.weights_.push_back(std::move(w));
  }

  if (strict) {
    auto violations = check_well_defined(g);
    if (!violations.empty()) {
      std::string msg = "grammar is not well defined:";
      for (const auto& v : violations) msg += "\n  " + describe_violation(g, v);
      throw WellDefinednessError(msg, std::move(violations));
    }
  }
  return g;
}

std::vector<ShapeViolation> check_well_defined(const WeightedCFG& g) {
  std::vector<ShapeViolation> out;
  for (const Rule& r : g.rules()) {
    Shape expected = g.expected_weight_shape(r);
    const Shape& actual = g.weight(r.id).shape();
    if (expected != actual) out.push_back({r.id, expected, actual});
  }
  return out;
}

std::string describe_violation(const WeightedCFG& g, const ShapeViolation& v) {
  return rule_label(v.rule) + " (" + g.render_rule(v.rule) + "): expected shape " +
         shape_to_string(v.expected) + ", got " + shape_to_string(v.actual);
}

// --- file format -------------------------------------------------------

namespace {

struct Token {
  std::string text;
  int line;
};

// Whitespace-separated tokens; ':' '[' ']' ',' delimit themselves; '#'
// kills the rest of the line.
std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back({cur, line});
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '#') {
      flush();
      while (i < text.size() && text[i] != '\n') ++i;
      --i;
    } else if (c == '\n') {
      flush();
      ++line;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == ':' || c == '[' || c == ']' || c == ',') {
      flush();
      out.push_back({std::string(1, c), line});
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

class GrammarReader {
 public:
  GrammarReader(const std::string& text, const Semiring& ring)
      : tokens_(tokenize(text)), ring_(ring) {}

  std::pair<WeightedCFG, std::vector<ShapeViolation>> read() {
    GrammarBuilder b(ring_);
    // Pass 1: declarations, so rules may mention symbols dim'd later.
    bool have_start = false;
    for (pos_ = 0; pos_ < tokens_.size();) {
      const Token& t = tokens_[pos_];
      if (t.text == "start") {
        if (have_start) throw ParseError(t.line, "duplicate start declaration");
        have_start = true;
        ++pos_;
        b.set_start(name_token("start symbol"));
      } else if (t.text == "dim") {
        ++pos_;
        std::string name = name_token("symbol in dim");
        b.dim(name, int_token("dimension of '" + name + "'"));
      } else if (t.text == "rule") {
        skip_rule();
      } else {
        throw ParseError(t.line, "expected start/dim/rule, got '" + t.text + "'");
      }
    }
    if (!have_start) throw ParseError("no start declaration in grammar");

    // Pass 2: rules.
    for (pos_ = 0; pos_ < tokens_.size();) {
      const Token& t = tokens_[pos_];
      if (t.text == "start") {
        pos_ += 2;
      } else if (t.text == "dim") {
        pos_ += 3;
      } else {
        read_rule(b);
      }
    }

    try {
      WeightedCFG g = b.build(false);
      return {std::move(g), check_well_defined(g)};
    } catch (const ConfigError& e) {
      // Builder-level structural complaints (duplicate rule, lhs without
      // dim, ...) are grammar file syntax problems from the caller's view.
      throw ParseError(e.what());
    }
  }

 private:
  const Token& peek(const char* what) {
    if (pos_ >= tokens_.size()) {
      int line = tokens_.empty() ? 1 : tokens_.back().line;
      throw ParseError(line, std::string("unexpected end of file, expected ") + what);
    }
    return tokens_[pos_];
  }

  std::string name_token(const char* what) {
    const Token& t = peek(what);
    if (t.text == ":" || t.text == "[" || t.text == "]" || t.text == "," ||
        t.text == "->") {
      throw ParseError(t.line, std::string("expected ") + what + ", got '" + t.text + "'");
    }
    ++pos_;
    return t.text;
  }

  int int_token(const std::string& what) {
    const Token& t = peek(what.c_str());
    int v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size() || v <= 0) {
      throw ParseError(t.line, what + " must be a positive integer, got '" + t.text + "'");
    }
    ++pos_;
    return v;
  }

  void expect(const std::string& text) {
    const Token& t = peek(("'" + text + "'").c_str());
    if (t.text != text) {
      throw ParseError(t.line, "expected '" + text + "', got '" + t.text + "'");
    }
    ++pos_;
  }

  // Positions past one rule without touching the values.
  void skip_rule() {
    expect("rule");
    while (peek("':' in rule").text != ":") ++pos_;
    expect(":");
    expect("[");
    while (peek("']' closing the value list").text != "]") ++pos_;
    expect("]");
  }

  void read_rule(GrammarBuilder& b) {
    expect("rule");
    std::string lhs = name_token("rule lhs");
    expect("->");
    std::vector<std::string> rhs;
    while (peek("':' in rule").text != ":") {
      rhs.push_back(name_token("rhs symbol"));
    }
    if (rhs.empty()) {
      throw ParseError(tokens_[pos_].line,
                       "rule '" + lhs + " -> ' has an empty right-hand side");
    }
    expect(":");
    expect("[");
    std::vector<Value> values;
    while (true) {
      const Token& t = peek("']' closing the value list");
      if (t.text == "]") break;
      if (t.text == ",") {
        ++pos_;
        continue;
      }
      try {
        values.push_back(ring_.parse_token(t.text));
      } catch (const Error& e) {
        throw ParseError(t.line, e.what());
      }
      ++pos_;
    }
    expect("]");
    b.rule(lhs, rhs, std::move(values));
  }

  std::vector<Token> tokens_;
  const Semiring& ring_;
  std::size_t pos_ = 0;
};

}  // namespace

std::pair<WeightedCFG, std::vector<ShapeViolation>> parse_grammar_file_lenient(
    const std::string& text, const Semiring& ring) {
  return GrammarReader(text, ring).read();
}

WeightedCFG parse_grammar_file(const std::string& text, const Semiring& ring) {
  auto [g, violations] = parse_grammar_file_lenient(text, ring);
  if (!violations.empty()) {
    std::string msg = "grammar is not well defined:";
    for (const auto& v : violations) msg += "\n  " + describe_violation(g, v);
    throw WellDefinednessError(msg, std::move(violations));
  }
  return g;
}

// --- derivation trees & enumeration ------------------------------------

SymbolId tree_root(const WeightedCFG& g, const GrammarDerivationTree& t) {
  return g.rule(t.rule).lhs;
}

namespace {

void yield_rec(const WeightedCFG& g, const GrammarDerivationTree& t,
               std::vector<SymbolId>& out) {
  const Rule& r = g.rule(t.rule);
  std::size_t child = 0;
  for (SymbolId s : r.rhs) {
    if (g.is_nonterminal(s)) {
      if (child >= t.children.size()) {
        throw InternalError("derivation tree for '" + g.render_rule(t.rule) +
                            "' is missing children");
      }
      yield_rec(g, t.children[child++], out);
    } else {
      out.push_back(s);
    }
  }
}

class Enumerator {
 public:
  Enumerator(const WeightedCFG& g, std::span<const SymbolId> sentence, int cap)
      : g_(g), sentence_(sentence), cap_(cap) {}

  EnumerationResult run() {
    EnumerationResult res;
    res.trees = derive(g_.start(), 0, static_cast<int>(sentence_.size()), false);
    res.truncated = truncated_;
    return res;
  }

 private:
  using Trees = std::vector<GrammarDerivationTree>;
  using PathKey = std::tuple<SymbolId, int, int>;

  struct Frame {
    PathKey key;
    bool pump;  // edge into this frame is a unary rule over the full span
  };

  // All derivation trees of nt over sentence[i, j). No memoization: results
  // depend on the active path through the cycle cut below.
  Trees derive(SymbolId nt, int i, int j, bool pump_edge) {
    const PathKey key{nt, i, j};
    for (std::size_t q = path_.size(); q-- > 0;) {
      if (path_[q].key != key) continue;
      // Same item already open on this path. Since the grammar is
      // epsilon-free, spans only shrink downwards, so everything between
      // the two occurrences covers [i, j) as well. The repeat mints extra
      // trees only when every step in between is a unary rule over the
      // full span (a genuine pump); any wider rule on the way leaves a
      // sibling with an empty span and the branch is dead regardless.
      bool all_pump = pump_edge;
      for (std::size_t f = q + 1; all_pump && f < path_.size(); ++f) {
        all_pump = path_[f].pump;
      }
      if (all_pump) truncated_ = true;
      return {};
    }
    path_.push_back(Frame{key, pump_edge});
    Trees out;
    for (RuleId rid : g_.rules_with_lhs(nt)) {
      const Rule& r = g_.rule(rid);
      std::vector<Trees> parts;  // child tree choices, rhs-left to right
      match(r, 0, i, j, parts, out, rid);
    }
    path_.pop_back();
    return out;
  }

  // Matches r.rhs[p..] against sentence[i, j), accumulating per-child
  // choices in parts; complete matches are expanded into trees on out.
  void match(const Rule& r, std::size_t p, int i, int j, std::vector<Trees>& parts,
             Trees& out, RuleId rid) {
    if (static_cast<int>(out.size()) >= cap_) {
      truncated_ = true;
      return;
    }
    if (p == r.rhs.size()) {
      if (i == j) emit(rid, parts, out);
      return;
    }
    SymbolId s = r.rhs[p];
    if (g_.is_terminal(s)) {
      if (i < j && sentence_[static_cast<std::size_t>(i)] == s) {
        match(r, p + 1, i + 1, j, parts, out, rid);
      }
      return;
    }
    for (int split = i + 1; split <= j; ++split) {
      Trees sub = derive(s, i, split, r.rhs.size() == 1 && split == j);
      if (sub.empty()) continue;
      parts.push_back(std::move(sub));
      match(r, p + 1, split, j, parts, out, rid);
      parts.pop_back();
    }
  }

  // Cartesian product over parts, leftmost child varying slowest.
  void emit(RuleId rid, const std::vector<Trees>& parts, Trees& out) {
    std::vector<std::size_t> pick(parts.size(), 0);
    while (true) {
      if (static_cast<int>(out.size()) >= cap_) {
        truncated_ = true;
        return;
      }
      GrammarDerivationTree t;
      t.rule = rid;
      for (std::size_t c = 0; c < parts.size(); ++c) {
        t.children.push_back(parts[c][pick[c]]);
      }
      out.push_back(std::move(t));
      int c = static_cast<int>(parts.size()) - 1;
      for (; c >= 0; --c) {
        if (++pick[static_cast<std::size_t>(c)] < parts[static_cast<std::size_t>(c)].size()) break;
        pick[static_cast<std::size_t>(c)] = 0;
      }
      if (c < 0) return;
    }
  }

  const WeightedCFG& g_;
  std::span<const SymbolId> sentence_;
  int cap_;
  bool truncated_ = false;
  std::vector<Frame> path_;
};

}  // namespace

std::vector<SymbolId> tree_yield(const WeightedCFG& g, const GrammarDerivationTree& t) {
  std::vector<SymbolId> out;
  yield_rec(g, t, out);
  return out;
}

EnumerationResult enumerate_derivations(const WeightedCFG& g,
                                        std::span<const SymbolId> sentence,
                                        int cap) {
  if (sentence.empty()) {
    throw ConfigError("enumerate_derivations: sentence must be non-empty");
  }
  return Enumerator(g, sentence, cap).run();
}

}  // namespace lvsp
