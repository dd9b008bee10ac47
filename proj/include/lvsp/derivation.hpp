#pragma once

#include "lvsp/grammar.hpp"

namespace lvsp {

// A derivation flattened to the rule sequence of its leftmost derivation.
struct DerivationString {
  std::vector<RuleId> rules;

  bool operator==(const DerivationString&) const = default;
};

// Value of a derivation tree: bottom-up, each node contracts its rule weight
// with the child values (child i at rank i). Result is rank-1 with the
// dimension of the root's lhs. Throws Error if the tree is structurally
// invalid for the grammar.
Tensor tree_value(const WeightedCFG& g, const GrammarDerivationTree& t);

// Rule sequence of the leftmost derivation = preorder walk of the tree.
DerivationString flatten(const GrammarDerivationTree& t);

// Inverse of flatten. Throws Error when the sequence is not the flattening
// of any derivation tree of g.
GrammarDerivationTree unflatten(const WeightedCFG& g, const DerivationString& s);

// Value of a derivation string: left-to-right product, each step contracting
// rank 1 of the accumulator with rank 1 of the next rule's weight. For a
// valid derivation string this equals tree_value of the corresponding tree;
// for arbitrary sequences the product may be undefined (PartialOpError).
Tensor string_value(const WeightedCFG& g, const DerivationString& s);

// Brute-force sentence value: enumerate every derivation of the sentence
// and sum the tree values. Exact only when enumeration is exhaustive;
// throws ConfigError when it was cut (cycles or cap), because a truncated
// sum is not the sentence value.
Tensor sentence_value_oracle(const WeightedCFG& g, std::span<const SymbolId> sentence,
                             int cap = kDefaultEnumerationCap);

// "(r1 (r3) (r2 (r3) (r3)))"
std::string tree_to_sexpr(const GrammarDerivationTree& t);

}  // namespace lvsp
