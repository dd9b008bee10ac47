#pragma once

#include <compare>
#include <optional>

#include "lvsp/derivation.hpp"

namespace lvsp {

// Grammar does not fit the shape of rules the chosen item-based description
// can instantiate.
class DescriptionMismatch : public Error {
 public:
  explicit DescriptionMismatch(const std::string& msg) : Error(msg) {}
};

// Chart item [i, A, j]: nonterminal A spans sentence positions i..j
// (0-based, half-open).
struct Item {
  int start;
  SymbolId nt;
  int end;

  auto operator<=>(const Item&) const = default;
};

std::string item_to_string(const WeightedCFG& g, const Item& x);  // "0 A 1"

// Ground instance of a deduction rule. The tensor-bearing antecedent (the
// grammar rule) always comes first; the remaining antecedents are items for
// the rule's rhs nonterminals in order.
struct InferenceInstance {
  RuleId rule;
  std::vector<Item> items;
  Item conclusion;
};

// Built-in item-based descriptions.
//  cky:       rules must be A -> terminal or A -> B C
//  cky_unary: additionally allows A -> B (which is what makes same-span
//             cycles, and so looping buckets, possible)
enum class DescriptionId { cky, cky_unary };

// Smallest built-in description covering the grammar; throws
// DescriptionMismatch naming an offending rule if none fits.
DescriptionId pick_description(const WeightedCFG& g);

struct Instantiation {
  std::vector<InferenceInstance> instances;
  Item goal;
};

// Every ground instance of the description's deduction rules over the
// sentence: lexical instances where the terminal matches, span/split
// instances everywhere. Items never derivable simply end up with zero
// values. Goal is [0, S, n].
Instantiation instantiate_cky(const WeightedCFG& g, std::span<const SymbolId> sentence);
Instantiation instantiate_cky_unary(const WeightedCFG& g,
                                    std::span<const SymbolId> sentence);
Instantiation instantiate(const WeightedCFG& g, DescriptionId description,
                          std::span<const SymbolId> sentence);

struct Bucket {
  std::vector<Item> items;
  bool looping = false;
};

// Strongly connected components of the item dependency graph (antecedent ->
// conclusion), topologically ordered so dependencies come first. A bucket
// loops iff it has more than one item or a self-edge.
std::vector<Bucket> bucket_order(const std::vector<InferenceInstance>& instances);

struct FixpointOptions {
  int max_generations = 10000;
  double tolerance = 1e-9;
};

// Per-bucket record of what the fixpoint iteration did. Non-looping buckets
// keep generations = 0. converged = false means the iteration hit
// max_generations with the last two generations still apart; the stored
// values are the final generation (a warning-bearing result, not an error).
struct BucketState {
  int generations = 0;
  bool converged = true;
};

// Chart: instances, items grouped into dependency-ordered buckets, and the
// inner/outer tensors as the passes fill them in. The goal item is always
// present even when nothing concludes it.
class Chart {
 public:
  Chart(const WeightedCFG& g, Instantiation inst);

  const WeightedCFG& grammar() const { return *g_; }
  const Item& goal() const { return goal_; }
  const std::vector<InferenceInstance>& instances() const { return instances_; }
  const std::vector<Item>& items() const { return items_; }
  const std::vector<Bucket>& buckets() const { return buckets_; }

  bool has_item(const Item& x) const { return index_of(x) >= 0; }
  int bucket_of(const Item& x) const;

  // Instance indices concluding x.
  const std::vector<int>& concluding(const Item& x) const;
  // (instance index, 0-based antecedent-item position) pairs where x occurs.
  const std::vector<std::pair<int, int>>& uses(const Item& x) const;

  bool inner_computed(const Item& x) const;
  // Throws InternalError when the schedule never computed x (a bug).
  const Tensor& inner(const Item& x) const;
  void set_inner(const Item& x, Tensor v);

  bool outer_computed(const Item& x) const;
  const Tensor& outer(const Item& x) const;
  void set_outer(const Item& x, Tensor v);

  BucketState inner_state(int bucket) const { return inner_state_[static_cast<std::size_t>(bucket)]; }
  BucketState outer_state(int bucket) const { return outer_state_[static_cast<std::size_t>(bucket)]; }
  void set_inner_state(int bucket, BucketState s);
  void set_outer_state(int bucket, BucketState s);
  bool all_converged() const;

  // Shape of V(x): [dim(nonterminal of x)].
  Shape inner_shape(const Item& x) const;

 private:
  int index_of(const Item& x) const;
  int require(const Item& x) const;

  const WeightedCFG* g_;
  std::vector<InferenceInstance> instances_;
  Item goal_;
  std::vector<Item> items_;  // sorted, unique
  std::vector<Bucket> buckets_;
  std::vector<int> bucket_of_;
  std::vector<std::optional<Tensor>> inner_;
  std::vector<std::optional<Tensor>> outer_;
  std::vector<BucketState> inner_state_;
  std::vector<BucketState> outer_state_;
  std::vector<std::vector<int>> concluding_;
  std::vector<std::vector<std::pair<int, int>>> uses_;
};

// V(x) for an item in a non-looping bucket: sum over instances concluding x
// of the rule weight contracted with the antecedent item values. Stores the
// result in the chart and returns it.
Tensor inner_value(Chart& chart, const Item& x);

// Fixpoint iteration for one looping bucket: generation g recomputes every
// item of the bucket from generation g-1 values (items outside the bucket
// use their final values). Starts from zero tensors; stops when a
// generation reproduces the previous one (exact equality for idempotent
// semirings, approx_eq at opts.tolerance otherwise) or at
// opts.max_generations, recording BucketState either way. Requires an
// omega-continuous semiring.
void inner_value_looping(Chart& chart, int bucket, const FixpointOptions& opts = {});

// Runs the inner pass over every bucket in dependency order.
void compute_inner(Chart& chart, const FixpointOptions& opts = {});

// End-to-end: instantiate, bucket, run the inner pass, return V(goal);
// zero_tensor([dim(S)]) when the goal is underivable.
Tensor sentence_value(const WeightedCFG& g, DescriptionId description,
                      std::span<const SymbolId> sentence,
                      const FixpointOptions& opts = {});
// Same, choosing the description via pick_description.
Tensor sentence_value(const WeightedCFG& g, std::span<const SymbolId> sentence,
                      const FixpointOptions& opts = {});

// Derivation tree over items: a grammar derivation tree with every node
// labelled by the chart item it establishes.
struct ItemDerivationTree {
  Item head;
  RuleId rule;
  std::vector<ItemDerivationTree> children;
};

// Labels a grammar derivation tree with items, laying its yield out from
// sentence position `start`.
ItemDerivationTree item_tree_from_grammar_tree(const WeightedCFG& g,
                                               const GrammarDerivationTree& t,
                                               int start = 0);

// Value of an item derivation tree (same contraction scheme as tree_value;
// the item labels do not change the value).
Tensor item_tree_value(const WeightedCFG& g, const ItemDerivationTree& t);

// Number of nodes headed by exactly the item x.
int count_item_occurrences(const ItemDerivationTree& t, const Item& x);

}  // namespace lvsp
