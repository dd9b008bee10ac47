#include "lvsp/derivation.hpp"

namespace lvsp {

Tensor tree_value(const WeightedCFG& g, const GrammarDerivationTree& t) {
  const Rule& r = g.rule(t.rule);
  auto nt_positions = g.rhs_nonterminal_positions(r);
  if (t.children.size() != nt_positions.size()) {
    throw Error("invalid derivation tree: rule '" + g.render_rule(t.rule) + "' has " +
                std::to_string(nt_positions.size()) + " nonterminals but node has " +
                std::to_string(t.children.size()) + " children");
  }
  std::vector<Tensor> child_values;
  child_values.reserve(t.children.size());
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    SymbolId want = r.rhs[static_cast<std::size_t>(nt_positions[i])];
    SymbolId got = g.rule(t.children[i].rule).lhs;
    if (want != got) {
      throw Error("invalid derivation tree: child " + std::to_string(i + 1) +
                  " of '" + g.render_rule(t.rule) + "' derives '" +
                  g.symbol_name(got) + "', expected '" + g.symbol_name(want) + "'");
    }
    child_values.push_back(tree_value(g, t.children[i]));
  }
  return contract_list(g.weight(t.rule), child_values);
}

namespace {

void flatten_rec(const GrammarDerivationTree& t, std::vector<RuleId>& out) {
  out.push_back(t.rule);
  for (const auto& c : t.children) flatten_rec(c, out);
}

GrammarDerivationTree unflatten_rec(const WeightedCFG& g, const DerivationString& s,
                                    std::size_t& pos, SymbolId expect_lhs) {
  if (pos >= s.rules.size()) {
    throw Error("invalid derivation string: ran out of rules while expanding '" +
                g.symbol_name(expect_lhs) + "'");
  }
  RuleId rid = s.rules[pos];
  if (rid < 0 || rid >= static_cast<RuleId>(g.rules().size())) {
    throw Error("invalid derivation string: no rule with id " + std::to_string(rid));
  }
  const Rule& r = g.rule(rid);
  if (r.lhs != expect_lhs) {
    throw Error("invalid derivation string: " + rule_label(rid) + " rewrites '" +
                g.symbol_name(r.lhs) + "' where '" + g.symbol_name(expect_lhs) +
                "' was required");
  }
  ++pos;
  GrammarDerivationTree t;
  t.rule = rid;
  for (SymbolId sym : r.rhs) {
    if (g.is_nonterminal(sym)) {
      t.children.push_back(unflatten_rec(g, s, pos, sym));
    }
  }
  return t;
}

}  // namespace

DerivationString flatten(const GrammarDerivationTree& t) {
  DerivationString s;
  flatten_rec(t, s.rules);
  return s;
}

GrammarDerivationTree unflatten(const WeightedCFG& g, const DerivationString& s) {
  if (s.rules.empty()) throw Error("invalid derivation string: empty");
  std::size_t pos = 0;
  SymbolId root = g.rule(s.rules[0]).lhs;
  GrammarDerivationTree t = unflatten_rec(g, s, pos, root);
  if (pos != s.rules.size()) {
    throw Error("invalid derivation string: " +
                std::to_string(s.rules.size() - pos) + " trailing rules");
  }
  return t;
}

Tensor string_value(const WeightedCFG& g, const DerivationString& s) {
  if (s.rules.empty()) throw Error("invalid derivation string: empty");
  // Strict left-to-right chain. Rank 1 of the accumulator is the leftmost
  // still-open nonterminal; each rule closes it by contracting against the
  // rule weight's lhs index (its last rank), and the rule's rhs-nonterminal
  // ranks take its place at the front. A dimension mismatch here means the
  // string is not a valid derivation string.
  Tensor acc = g.weight(s.rules[0]);
  for (std::size_t i = 1; i < s.rules.size(); ++i) {
    const Tensor& w = g.weight(s.rules[i]);
    acc = contract(acc, 1, w, w.rank());
  }
  return acc;
}

Tensor sentence_value_oracle(const WeightedCFG& g, std::span<const SymbolId> sentence,
                             int cap) {
  EnumerationResult res = enumerate_derivations(g, sentence, cap);
  if (res.truncated) {
    throw ConfigError(
        "sentence has infinitely many (or more than cap) derivations; "
        "the enumeration oracle cannot value it");
  }
  Tensor sum = zero_tensor(g.ring(), Shape{g.dim(g.start())});
  for (const auto& t : res.trees) {
    sum = tensor_add(sum, tree_value(g, t));
  }
  return sum;
}

std::string tree_to_sexpr(const GrammarDerivationTree& t) {
  std::string out = "(" + rule_label(t.rule);
  for (const auto& c : t.children) {
    out += " " + tree_to_sexpr(c);
  }
  return out + ")";
}

}  // namespace lvsp
