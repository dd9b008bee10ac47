#pragma once

#include <map>

#include "lvsp/deduction.hpp"

namespace lvsp {

// Outer value of an item: the summed value of all goal-headed derivations
// with one x-headed subtree cut out. Shape is always the item's inner shape
// extended by dim(start): the trailing rank tracks the goal's latent index.
struct OuterValue {
  Item item;
  Tensor tensor;
};

// Rank permutation used by the outer recursion. After the rule weight has
// its trailing siblings contracted away and the identity tensor spliced in
// at the removed child's slot, the ranks read
//
//   (leading siblings) (removed-child dims except the contracted leg)
//   (s, removed-child dims, s') (trailing block)
//
// and this permutation moves the (s, ..., s') block behind the trailing
// block, so the result ends with parent-lhs, s, child-dims, s' and is ready
// for the final contraction against the parent's outer value. k is the
// removed antecedent's position (2 = first item antecedent), removed_rank
// the rank of the removed subtree's value (1 for chart items), total_rank
// the rank of the tensor being permuted. Throws InternalError when the
// block arithmetic does not add up.
std::vector<int> outer_permutation(int k, int removed_rank, int total_rank);

// One use's contribution to the outer value of the child at position pos
// (0-based among the rule's nonterminal children): rule weight, sibling
// values, the identity splice, the permutation above, and finally the
// contraction with the parent's outer value. child_values must hold a value
// for every nonterminal child (the one at pos only supplies its shape).
Tensor outer_contribution(const WeightedCFG& g, RuleId rule,
                          const std::vector<Tensor>& child_values, int pos,
                          const Tensor& parent_outer);

// Z(x) for an item in a non-looping bucket: the sum of outer_contribution
// over every instance that uses x, seeded with the identity tensor for the
// goal (its empty context). Parents' outer values must already be computed
// (reverse bucket order). Requires a commutative semiring. Stores into the
// chart.
OuterValue outer_value(Chart& chart, const Item& x);

// Looping-bucket outer fixpoint, mirroring inner_value_looping: generation
// g reads generation g-1 for in-bucket parents and final values elsewhere.
// The goal's identity seed is kept as a summand in every generation.
void outer_value_looping(Chart& chart, int bucket, const FixpointOptions& opts = {});

// Full outer pass in reverse bucket order. Inner pass must have run.
void compute_outer(Chart& chart, const FixpointOptions& opts = {});

// Diagnostic identity: the value of a full derivation equals the value of
// the subtree at `path` (a sequence of 0-based child indices) contracted
// with the value of its context, where the context value is computed by the
// standalone recursion along the path, not by the chart pass. Commutative
// semirings only.
bool derivation_split_check(const WeightedCFG& g, const ItemDerivationTree& full,
                            std::span<const int> path, double tol);

// Expected number of uses of each rule in a random derivation of the parsed
// sentence (probability semiring only). Posterior weight of one rule use =
// rule weight x child inner values x parent outer value, summed over all
// latent indices; the normalizer is the goal value summed over the start
// symbol's latent states (all-ones root convention, see README). Throws
// UndefinedPosterior when the sentence has zero total probability.
std::map<RuleId, double> expected_rule_counts(Chart& chart);

}  // namespace lvsp
