#include "lvsp/outside.hpp"

#include <algorithm>

namespace lvsp {

namespace {

void require_commutative(const Semiring& ring, const char* what) {
  if (!ring.is_commutative()) {
    throw UnsupportedOperation(std::string(what) +
                               " needs a commutative semiring, '" + ring.name() +
                               "' is not one");
  }
}

}  // namespace

std::vector<int> outer_permutation(int k, int removed_rank, int total_rank) {
  const int p = k - 2;                 // leading siblings, stay put
  const int hole = removed_rank - 1;   // removed subtree's non-leg dims, stay
  const int m = removed_rank + 2;      // (s, child dims, s') block, moves back
  const int t = total_rank - p - hole - m;  // trailing block, slides forward
  if (k < 2 || removed_rank < 1 || p < 0 || t < 0) {
    throw InternalError("outer_permutation: inconsistent rank arithmetic (k=" +
                        std::to_string(k) + ", removed_rank=" +
                        std::to_string(removed_rank) + ", total_rank=" +
                        std::to_string(total_rank) + ")");
  }
  std::vector<int> pi(static_cast<std::size_t>(total_rank));
  int src = 0;
  for (int i = 0; i < p + hole; ++i, ++src) pi[static_cast<std::size_t>(src)] = src + 1;
  for (int i = 0; i < m; ++i, ++src) {
    pi[static_cast<std::size_t>(src)] = total_rank - m + i + 1;
  }
  for (int i = 0; i < t; ++i, ++src) pi[static_cast<std::size_t>(src)] = p + hole + i + 1;
  return pi;
}

Tensor outer_contribution(const WeightedCFG& g, RuleId rule,
                          const std::vector<Tensor>& child_values, int pos,
                          const Tensor& parent_outer) {
  const Rule& r = g.rule(rule);
  auto nts = g.rhs_nonterminal_positions(r);
  const int m = static_cast<int>(nts.size());
  if (static_cast<int>(child_values.size()) != m || pos < 0 || pos >= m) {
    throw InternalError("outer_contribution: child list does not fit rule " +
                        rule_label(rule));
  }
  const int d_child = g.dim(r.rhs[static_cast<std::size_t>(nts[static_cast<std::size_t>(pos)])]);
  const int s_dim = parent_outer.dim(parent_outer.rank());

  // Trailing siblings first (from the right, so rank positions stay put),
  // ...
  Tensor u = g.weight(rule);
  for (int p2 = m - 1; p2 > pos; --p2) {
    u = contract(u, p2 + 1, child_values[static_cast<std::size_t>(p2)], 1);
  }
  // ... then splice the identity pair into the removed child's slot, ...
  Tensor eye = identity_tensor(u.ring(), std::vector<int>{d_child, s_dim});
  u = contract(u, pos + 1, eye, 1);
  // ... rotate the spliced block past the parent-lhs rank, ...
  auto pi = outer_permutation(pos + 2, 1, u.rank());
  u = permute(u, pi);
  // ... contract the leading siblings, leaving (parent-lhs, s, child, s'),
  std::vector<Tensor> leading(child_values.begin(), child_values.begin() + pos);
  u = contract_list(u, leading);
  // ... and close with the parent's outer value.
  return contract_star(u, parent_outer);
}

OuterValue outer_value(Chart& chart, const Item& x) {
  const WeightedCFG& g = chart.grammar();
  require_commutative(g.ring(), "outer value");

  // The goal contributes its own empty context (the identity); everything
  // else starts from zero. Use contributions are added either way: with a
  // rule like S -> S the goal item genuinely occurs inside derivations, and
  // those occurrences carry context mass too.
  Shape shape = chart.inner_shape(x);
  shape.push_back(g.dim(g.start()));
  Tensor sum = x == chart.goal()
                   ? identity_tensor(g.ring(), std::vector<int>{g.dim(g.start())})
                   : zero_tensor(g.ring(), shape);
  for (auto [idx, pos] : chart.uses(x)) {
    const auto& inst = chart.instances()[static_cast<std::size_t>(idx)];
    std::vector<Tensor> vals;
    vals.reserve(inst.items.size());
    for (const Item& a : inst.items) vals.push_back(chart.inner(a));
    sum = tensor_add(sum,
                     outer_contribution(g, inst.rule, vals, pos,
                                        chart.outer(inst.conclusion)));
  }
  chart.set_outer(x, sum);
  return {x, std::move(sum)};
}

namespace {

bool outer_generation_converged(const Semiring& ring, const Tensor& prev,
                                const Tensor& next, double tolerance) {
  if (ring.is_idempotent()) {
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (!values_equal(prev[i], next[i])) return false;
    }
    return true;
  }
  return tensor_approx_eq(prev, next, tolerance);
}

}  // namespace

void outer_value_looping(Chart& chart, int bucket, const FixpointOptions& opts) {
  const WeightedCFG& g = chart.grammar();
  const Semiring& ring = g.ring();
  require_commutative(ring, "outer value");
  if (!ring.is_omega_continuous()) {
    throw UnsupportedOperation("looping bucket needs an omega-continuous semiring, '" +
                               ring.name() + "' is not flagged as one");
  }
  const Bucket& b = chart.buckets()[static_cast<std::size_t>(bucket)];
  const Tensor goal_eye = identity_tensor(ring, std::vector<int>{g.dim(g.start())});

  std::map<Item, Tensor> cur;
  for (const Item& x : b.items) {
    Shape shape = chart.inner_shape(x);
    shape.push_back(g.dim(g.start()));
    cur.emplace(x, zero_tensor(ring, shape));
  }

  BucketState state{opts.max_generations, false};
  for (int gen = 1; gen <= opts.max_generations; ++gen) {
    std::map<Item, Tensor> next;
    for (const Item& x : b.items) {
      // The goal seeds its own empty context; uses still accumulate on top
      // so a goal caught in a cycle (e.g. S -> S) picks up the context mass
      // of its inner occurrences as well.
      Shape shape = chart.inner_shape(x);
      shape.push_back(g.dim(g.start()));
      Tensor sum = x == chart.goal() ? goal_eye : zero_tensor(ring, shape);
      for (auto [idx, pos] : chart.uses(x)) {
        const auto& inst = chart.instances()[static_cast<std::size_t>(idx)];
        std::vector<Tensor> vals;
        vals.reserve(inst.items.size());
        for (const Item& a : inst.items) vals.push_back(chart.inner(a));
        auto in_bucket = cur.find(inst.conclusion);
        const Tensor& parent =
            in_bucket != cur.end() ? in_bucket->second : chart.outer(inst.conclusion);
        sum = tensor_add(sum, outer_contribution(g, inst.rule, vals, pos, parent));
      }
      next.emplace(x, std::move(sum));
    }
    bool same = true;
    for (const Item& x : b.items) {
      if (!outer_generation_converged(ring, cur.at(x), next.at(x), opts.tolerance)) {
        same = false;
        break;
      }
    }
    cur = std::move(next);
    if (same) {
      state = BucketState{gen, true};
      break;
    }
  }

  for (auto& [x, v] : cur) chart.set_outer(x, std::move(v));
  chart.set_outer_state(bucket, state);
}

void compute_outer(Chart& chart, const FixpointOptions& opts) {
  require_commutative(chart.grammar().ring(), "outer value");
  for (int b = static_cast<int>(chart.buckets().size()) - 1; b >= 0; --b) {
    if (chart.buckets()[static_cast<std::size_t>(b)].looping) {
      outer_value_looping(chart, b, opts);
    } else {
      for (const Item& x : chart.buckets()[static_cast<std::size_t>(b)].items) {
        outer_value(chart, x);
      }
    }
  }
}

bool derivation_split_check(const WeightedCFG& g, const ItemDerivationTree& full,
                            std::span<const int> path, double tol) {
  require_commutative(g.ring(), "derivation split check");

  Tensor whole = item_tree_value(g, full);

  const ItemDerivationTree* cur = &full;
  Tensor context = identity_tensor(g.ring(), std::vector<int>{g.dim(cur->head.nt)});
  for (int c : path) {
    if (c < 0 || c >= static_cast<int>(cur->children.size())) {
      throw Error("derivation_split_check: path leaves the tree");
    }
    std::vector<Tensor> vals;
    vals.reserve(cur->children.size());
    for (const auto& child : cur->children) {
      vals.push_back(item_tree_value(g, child));
    }
    context = outer_contribution(g, cur->rule, vals, c, context);
    cur = &cur->children[static_cast<std::size_t>(c)];
  }

  Tensor part = item_tree_value(g, *cur);
  Tensor recombined = contract_star(part, context);
  return tensor_approx_eq(recombined, whole, tol);
}

std::map<RuleId, double> expected_rule_counts(Chart& chart) {
  const WeightedCFG& g = chart.grammar();
  const Semiring& ring = g.ring();
  if (ring.name() != "probability") {
    throw UnsupportedOperation("expected rule counts are defined for the probability "
                               "semiring, not '" + ring.name() + "'");
  }

  const Tensor& goal_value = chart.inner(chart.goal());
  double total = 0.0;
  for (std::size_t i = 0; i < goal_value.size(); ++i) {
    total += std::get<double>(goal_value[i]);
  }
  if (total == 0.0) {
    throw UndefinedPosterior("sentence has zero total probability; "
                             "expected rule counts are undefined");
  }

  std::map<RuleId, double> counts;
  for (const Rule& r : g.rules()) counts[r.id] = 0.0;

  for (const auto& inst : chart.instances()) {
    std::vector<Tensor> vals;
    vals.reserve(inst.items.size());
    for (const Item& a : inst.items) vals.push_back(chart.inner(a));
    // Rule x children, summed against the parent's outer value and the
    // all-ones root distribution.
    Tensor u = contract_list(g.weight(inst.rule), vals);  // [dim(parent)]
    Tensor v = contract_star(u, chart.outer(inst.conclusion));  // [dim(S)]
    double mass = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mass += std::get<double>(v[i]);
    counts[inst.rule] += mass;
  }
  for (auto& [rule, c] : counts) c /= total;
  return counts;
}

}  // namespace lvsp
