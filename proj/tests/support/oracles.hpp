#pragma once

// Independent reference implementations for cross-checking the engine.
// Deliberately written in the most naive style available: explicit nested
// index loops, no strides, no shared code with the library internals beyond
// the semiring operations themselves.

#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "lvsp/grammar.hpp"
#include "lvsp/semiring.hpp"
#include "lvsp/tensor.hpp"

namespace lvsp::testsup {

// Contraction of r leading-consecutive rank pairs evaluated by brute force:
// for every multi-index of the result, sum over every multi-index of the
// contracted block. Mirrors only the *specification* of contract_multi (the
// shape rule and the delta-sum), not its implementation.
inline Tensor naive_contract_multi(const Tensor& a, int k, const Tensor& b, int l, int r) {
  const Semiring& ring = a.ring();
  Shape out;
  for (int i = 1; i < k; ++i) out.push_back(a.dim(i));
  for (int i = 1; i < l; ++i) out.push_back(b.dim(i));
  for (int i = l + r; i <= b.rank(); ++i) out.push_back(b.dim(i));
  for (int i = k + r; i <= a.rank(); ++i) out.push_back(a.dim(i));

  Shape contracted;
  for (int i = 0; i < r; ++i) contracted.push_back(a.dim(k + i));

  // Odometer over a shape; returns all multi-indices (one element, the empty
  // index, for rank 0).
  auto all_indices = [](const Shape& s) {
    std::vector<std::vector<int>> out_idx;
    std::vector<int> idx(s.size(), 0);
    while (true) {
      out_idx.push_back(idx);
      int pos = static_cast<int>(s.size()) - 1;
      while (pos >= 0) {
        if (++idx[static_cast<std::size_t>(pos)] < s[static_cast<std::size_t>(pos)]) break;
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    return out_idx;
  };

  Tensor result(ring, out);
  for (const auto& oidx : all_indices(out)) {
    Value sum = ring.zero();
    for (const auto& cidx : all_indices(contracted)) {
      // Rebuild the operand indices from the output index blocks.
      std::vector<int> ai, bi;
      std::size_t pos = 0;
      for (int i = 1; i < k; ++i) ai.push_back(oidx[pos++]);
      for (int i = 1; i < l; ++i) bi.push_back(oidx[pos++]);
      for (int i = 0; i < r; ++i) {
        ai.push_back(cidx[static_cast<std::size_t>(i)]);
        bi.push_back(cidx[static_cast<std::size_t>(i)]);
      }
      std::vector<int> b_tail, a_tail;
      for (int i = l + r; i <= b.rank(); ++i) b_tail.push_back(oidx[pos++]);
      for (int i = k + r; i <= a.rank(); ++i) a_tail.push_back(oidx[pos++]);
      bi.insert(bi.end(), b_tail.begin(), b_tail.end());
      ai.insert(ai.end(), a_tail.begin(), a_tail.end());
      sum = ring.add(sum, ring.mul(a.at(ai), b.at(bi)));
    }
    result.at(oidx) = sum;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Scalar CKY inside/outside over a dims-all-1 grammar in CKY form. Works on
// plain Value scalars keyed by (start, nonterminal, end) — no tensors, no
// dependency buckets, no chart machinery. Grammars must be acyclic for the
// inside values to be finite (CKY form without unary nonterminal rules is).
// ---------------------------------------------------------------------------

struct ScalarInsideOutside {
  // Keys are (start, nonterminal symbol id, end); absent key = semiring zero.
  std::map<std::tuple<int, SymbolId, int>, Value> inside;
  std::map<std::tuple<int, SymbolId, int>, Value> outside;
  Value total;  // inside value of the goal (0, start symbol, n)
};

inline ScalarInsideOutside scalar_inside_outside(const WeightedCFG& g,
                                                 std::span<const SymbolId> sent) {
  const Semiring& ring = g.ring();
  const int n = static_cast<int>(sent.size());
  ScalarInsideOutside out;
  auto get = [&](auto& table, int i, SymbolId a, int j) -> Value {
    auto it = table.find(std::tuple(i, a, j));
    return it == table.end() ? ring.zero() : it->second;
  };
  auto bump = [&](auto& table, int i, SymbolId a, int j, const Value& v) {
    auto [it, fresh] = table.emplace(std::tuple(i, a, j), v);
    if (!fresh) it->second = ring.add(it->second, v);
  };
  auto scalar_weight = [&](RuleId r) { return g.weight(r)[0]; };

  for (int len = 1; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      const int j = i + len;
      for (const Rule& r : g.rules()) {
        if (len == 1 && r.rhs.size() == 1 && r.rhs[0] == sent[static_cast<std::size_t>(i)]) {
          bump(out.inside, i, r.lhs, j, scalar_weight(r.id));
        } else if (len >= 2 && r.rhs.size() == 2 && g.is_nonterminal(r.rhs[0]) &&
                   g.is_nonterminal(r.rhs[1])) {
          for (int m = i + 1; m < j; ++m) {
            Value v = ring.mul(scalar_weight(r.id),
                               ring.mul(get(out.inside, i, r.rhs[0], m),
                                        get(out.inside, m, r.rhs[1], j)));
            bump(out.inside, i, r.lhs, j, v);
          }
        }
      }
    }
  }
  out.total = get(out.inside, 0, g.start(), n);

  out.outside[std::tuple(0, g.start(), n)] = ring.one();
  // Push outside mass down from longer spans to shorter ones.
  for (int len = n; len >= 2; --len) {
    for (int i = 0; i + len <= n; ++i) {
      const int j = i + len;
      for (const Rule& r : g.rules()) {
        if (r.rhs.size() != 2 || !g.is_nonterminal(r.rhs[0]) || !g.is_nonterminal(r.rhs[1]))
          continue;
        const Value parent_out = get(out.outside, i, r.lhs, j);
        for (int m = i + 1; m < j; ++m) {
          const Value w = scalar_weight(r.id);
          bump(out.outside, i, r.rhs[0], m,
               ring.mul(ring.mul(w, get(out.inside, m, r.rhs[1], j)), parent_out));
          bump(out.outside, m, r.rhs[1], j,
               ring.mul(ring.mul(w, get(out.inside, i, r.rhs[0], m)), parent_out));
        }
      }
    }
  }
  return out;
}

// Classic inside-outside expected rule counts from the scalar tables
// (probability semiring only): sum over rule instances of
// outside(parent) * weight * product of inside(children), divided by the
// sentence total.
inline std::map<RuleId, double> scalar_expected_counts(const WeightedCFG& g,
                                                       std::span<const SymbolId> sent,
                                                       const ScalarInsideOutside& t) {
  const int n = static_cast<int>(sent.size());
  auto get = [&](const auto& table, int i, SymbolId a, int j) -> double {
    auto it = table.find(std::tuple(i, a, j));
    return it == table.end() ? 0.0 : std::get<double>(it->second);
  };
  const double total = std::get<double>(t.total);
  std::map<RuleId, double> counts;
  for (const Rule& r : g.rules()) counts[r.id] = 0.0;
  for (const Rule& r : g.rules()) {
    const double w = std::get<double>(g.weight(r.id)[0]);
    if (r.rhs.size() == 1 && g.is_terminal(r.rhs[0])) {
      for (int i = 0; i < n; ++i)
        if (sent[static_cast<std::size_t>(i)] == r.rhs[0])
          counts[r.id] += get(t.outside, i, r.lhs, i + 1) * w / total;
    } else if (r.rhs.size() == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 2; j <= n; ++j)
          for (int m = i + 1; m < j; ++m)
            counts[r.id] += get(t.outside, i, r.lhs, j) * w *
                            get(t.inside, i, r.rhs[0], m) * get(t.inside, m, r.rhs[1], j) /
                            total;
    }
  }
  return counts;
}

}  // namespace lvsp::testsup
