#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lvsp/semiring.hpp"

namespace lvsp {

// Dimensions per rank, outermost first. Empty shape = rank-0 scalar.
using Shape = std::vector<int>;

std::string shape_to_string(const Shape& s);

// Dense tensor over one semiring, stored flat in row-major order. Ranks are
// numbered from 1 in the public API, matching the way contractions are
// written ("contract rank k of a with rank l of b").
class Tensor {
 public:
  // Zero-filled tensor of the given shape.
  Tensor(const Semiring& ring, Shape shape);
  // Takes ownership of flat row-major data; size must match the shape.
  Tensor(const Semiring& ring, Shape shape, std::vector<Value> data);

  const Semiring& ring() const { return *ring_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  const Shape& shape() const { return shape_; }
  int dim(int r) const;  // 1-based rank
  std::size_t size() const { return data_.size(); }

  const Value& operator[](std::size_t flat) const { return data_[flat]; }
  Value& operator[](std::size_t flat) { return data_[flat]; }
  const std::vector<Value>& data() const { return data_; }

  // Multi-index access; idx has one 0-based entry per rank.
  const Value& at(std::span<const int> idx) const;
  Value& at(std::span<const int> idx);
  std::size_t flat_index(std::span<const int> idx) const;

  bool same_shape(const Tensor& other) const;

 private:
  const Semiring* ring_;
  Shape shape_;
  std::vector<std::size_t> strides_;
  std::vector<Value> data_;
};

// Entrywise sum. Defined only when both operands live in the same semiring
// and have identical shapes; anything else throws PartialOpError.
Tensor tensor_add(const Tensor& a, const Tensor& b);

// Contraction of r consecutive ranks, starting at rank k of a and rank l of
// b (dimensions must agree pairwise). The result keeps a's ranks before k,
// then b's ranks before l, then b's ranks after the contracted block, then
// a's ranks after the contracted block:
//
//   shape = a[1..k-1] ++ b[1..l-1] ++ b[l+r..] ++ a[k+r..]
//
// so b's leftover ranks take the place of a's contracted block. Each entry
// multiplies a-entry (left) by b-entry (right), which matters for
// non-commutative semirings. r = 0 is the pure outer product arrangement.
Tensor contract_multi(const Tensor& a, int k, const Tensor& b, int l, int r);

// Single-rank contraction: contract_multi with r = 1.
Tensor contract(const Tensor& a, int k, const Tensor& b, int l);

// Contracts the leading min(rank(a), rank(b)) ranks of both operands.
Tensor contract_star(const Tensor& a, const Tensor& b);

// x with args[i] contracted at rank i of x (at rank 1 of args[i]), applied
// left to right so that a non-commutative product comes out in argument
// order. args may be shorter than rank(x); the remaining trailing ranks
// survive.
Tensor contract_list(const Tensor& x, std::span<const Tensor> args);

// Rearranges ranks: rank i of the input becomes rank pi[i-1] of the result.
// pi must be a permutation of 1..rank.
Tensor permute(const Tensor& a, std::span<const int> pi);

// Identity tensor for the given dimension list: rank 2r, entry one exactly
// when the first r indices equal the last r indices in order.
Tensor identity_tensor(const Semiring& ring, std::span<const int> dims);

Tensor zero_tensor(const Semiring& ring, const Shape& shape);

// Rank-0 tensor holding a single value.
Tensor scalar_tensor(const Semiring& ring, Value v);

// Same shape and ring, entries equal up to the semiring's approx_eq.
bool tensor_approx_eq(const Tensor& a, const Tensor& b, double tol);

// Flat row-major rendering: "[v1, v2, ...]".
std::string to_string(const Tensor& t);

}  // namespace lvsp
