#include "lvsp/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace lvsp {

std::string shape_to_string(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

namespace {

std::size_t checked_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) {
      throw PartialOpError("tensor dimensions must be positive, got shape " +
                           shape_to_string(shape));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * static_cast<std::size_t>(shape[i + 1]);
  }
  return strides;
}

// Odometer step over a multi-index; false once every position has wrapped.
bool next_index(std::vector<int>& idx, const Shape& shape) {
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    if (++idx[i] < shape[i]) return true;
    idx[i] = 0;
  }
  return false;
}

void check_same_ring(const Tensor& a, const Tensor& b, const char* op) {
  if (&a.ring() != &b.ring()) {
    throw PartialOpError(std::string(op) + ": operands live in different semirings ('" +
                         a.ring().name() + "' vs '" + b.ring().name() + "')");
  }
}

}  // namespace

Tensor::Tensor(const Semiring& ring, Shape shape)
    : ring_(&ring), shape_(std::move(shape)) {
  std::size_t n = checked_size(shape_);
  strides_ = row_major_strides(shape_);
  data_.assign(n, ring.zero());
}

Tensor::Tensor(const Semiring& ring, Shape shape, std::vector<Value> data)
    : ring_(&ring), shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t n = checked_size(shape_);
  strides_ = row_major_strides(shape_);
  if (data_.size() != n) {
    throw PartialOpError("tensor data has " + std::to_string(data_.size()) +
                         " entries but shape " + shape_to_string(shape_) +
                         " needs " + std::to_string(n));
  }
}

int Tensor::dim(int r) const {
  assert(r >= 1 && r <= rank());
  return shape_[static_cast<std::size_t>(r) - 1];
}

std::size_t Tensor::flat_index(std::span<const int> idx) const {
  assert(idx.size() == shape_.size());
  std::size_t flat = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    assert(idx[i] >= 0 && idx[i] < shape_[i]);
    flat += strides_[i] * static_cast<std::size_t>(idx[i]);
  }
  return flat;
}

const Value& Tensor::at(std::span<const int> idx) const {
  return data_[flat_index(idx)];
}

Value& Tensor::at(std::span<const int> idx) { return data_[flat_index(idx)]; }

bool Tensor::same_shape(const Tensor& other) const {
  return shape_ == other.shape_;
}

Tensor tensor_add(const Tensor& a, const Tensor& b) {
  check_same_ring(a, b, "tensor_add");
  if (!a.same_shape(b)) {
    throw PartialOpError("tensor_add: shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  Tensor out(a.ring(), a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a.ring().add(a[i], b[i]);
  }
  return out;
}

Tensor contract_multi(const Tensor& a, int k, const Tensor& b, int l, int r) {
  check_same_ring(a, b, "contract");
  const int na = a.rank();
  const int nb = b.rank();
  if (r < 0) throw PartialOpError("contract: negative contraction width");
  if (k < 1 || k > na - r + 1) {
    throw PartialOpError("contract: rank block [" + std::to_string(k) + "," +
                         std::to_string(k + r - 1) + "] out of range for lhs shape " +
                         shape_to_string(a.shape()));
  }
  if (l < 1 || l > nb - r + 1) {
    throw PartialOpError("contract: rank block [" + std::to_string(l) + "," +
                         std::to_string(l + r - 1) + "] out of range for rhs shape " +
                         shape_to_string(b.shape()));
  }
  for (int i = 0; i < r; ++i) {
    if (a.dim(k + i) != b.dim(l + i)) {
      throw PartialOpError("contract: rank " + std::to_string(k + i) + " of " +
                           shape_to_string(a.shape()) + " and rank " +
                           std::to_string(l + i) + " of " +
                           shape_to_string(b.shape()) + " differ");
    }
  }

  // Result layout: a-prefix, b-prefix, b-suffix, a-suffix.
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  Shape shape;
  shape.insert(shape.end(), sa.begin(), sa.begin() + (k - 1));
  shape.insert(shape.end(), sb.begin(), sb.begin() + (l - 1));
  shape.insert(shape.end(), sb.begin() + (l - 1) + r, sb.end());
  shape.insert(shape.end(), sa.begin() + (k - 1) + r, sa.end());

  Shape contracted(sa.begin() + (k - 1), sa.begin() + (k - 1) + r);
  const int pa = k - 1;                // a-prefix length
  const int pb = l - 1;                // b-prefix length
  const int qb = nb - (l - 1) - r;     // b-suffix length

  const Semiring& ring = a.ring();
  Tensor out(ring, shape);

  std::vector<int> oidx(shape.size(), 0);
  std::vector<int> aidx(static_cast<std::size_t>(na));
  std::vector<int> bidx(static_cast<std::size_t>(nb));
  std::vector<int> t(static_cast<std::size_t>(r));
  std::size_t flat = 0;
  do {
    // Split the output index back into the four blocks.
    for (int i = 0; i < pa; ++i) aidx[static_cast<std::size_t>(i)] = oidx[static_cast<std::size_t>(i)];
    for (int i = 0; i < pb; ++i) bidx[static_cast<std::size_t>(i)] = oidx[static_cast<std::size_t>(pa + i)];
    for (int i = 0; i < qb; ++i) {
      bidx[static_cast<std::size_t>(pb + r + i)] = oidx[static_cast<std::size_t>(pa + pb + i)];
    }
    for (int i = 0; i < na - pa - r; ++i) {
      aidx[static_cast<std::size_t>(pa + r + i)] = oidx[static_cast<std::size_t>(pa + pb + qb + i)];
    }

    Value acc = ring.zero();
    std::fill(t.begin(), t.end(), 0);
    bool more = true;
    while (more) {
      for (int i = 0; i < r; ++i) {
        aidx[static_cast<std::size_t>(pa + i)] = t[static_cast<std::size_t>(i)];
        bidx[static_cast<std::size_t>(pb + i)] = t[static_cast<std::size_t>(i)];
      }
      acc = ring.add(acc, ring.mul(a.at(aidx), b.at(bidx)));
      more = next_index(t, contracted);  // r == 0: single term, no sum
    }
    out[flat++] = acc;
  } while (next_index(oidx, shape));

  return out;
}

Tensor contract(const Tensor& a, int k, const Tensor& b, int l) {
  return contract_multi(a, k, b, l, 1);
}

Tensor contract_star(const Tensor& a, const Tensor& b) {
  int r = std::min(a.rank(), b.rank());
  return contract_multi(a, 1, b, 1, r);
}

Tensor contract_list(const Tensor& x, std::span<const Tensor> args) {
  if (static_cast<int>(args.size()) > x.rank()) {
    throw PartialOpError("contract_list: " + std::to_string(args.size()) +
                         " arguments for a rank-" + std::to_string(x.rank()) +
                         " tensor");
  }
  // Left-to-right application, so a non-commutative product comes out in
  // argument order. Argument i still contracts against what was originally
  // rank i of x: earlier arguments' residual ranks land in front, which
  // advances the target position by rank-1 per argument (0 for the usual
  // rank-1 arguments).
  Tensor acc = x;
  int pos = 1;
  for (const Tensor& a : args) {
    acc = contract(acc, pos, a, 1);
    pos += a.rank() - 1;
  }
  return acc;
}

Tensor permute(const Tensor& a, std::span<const int> pi) {
  const int n = a.rank();
  if (static_cast<int>(pi.size()) != n) {
    throw PartialOpError("permute: permutation length " + std::to_string(pi.size()) +
                         " does not match rank " + std::to_string(n));
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int p : pi) {
    if (p < 1 || p > n || seen[static_cast<std::size_t>(p - 1)]) {
      throw PartialOpError("permute: not a permutation of 1.." + std::to_string(n));
    }
    seen[static_cast<std::size_t>(p - 1)] = true;
  }

  Shape shape(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    shape[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)] - 1)] =
        a.shape()[static_cast<std::size_t>(i)];
  }
  Tensor out(a.ring(), shape);
  if (n == 0) {
    out[0] = a[0];
    return out;
  }
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<int> dst(static_cast<std::size_t>(n));
  std::size_t flat = 0;
  do {
    for (int i = 0; i < n; ++i) {
      dst[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)] - 1)] =
          idx[static_cast<std::size_t>(i)];
    }
    out.at(dst) = a[flat++];
  } while (next_index(idx, a.shape()));
  return out;
}

Tensor identity_tensor(const Semiring& ring, std::span<const int> dims) {
  Shape shape(dims.begin(), dims.end());
  shape.insert(shape.end(), dims.begin(), dims.end());
  Tensor out(ring, shape);
  const int r = static_cast<int>(dims.size());
  if (r == 0) {
    out[0] = ring.one();
    return out;
  }
  std::vector<int> idx(static_cast<std::size_t>(2 * r), 0);
  std::size_t flat = 0;
  do {
    bool diag = true;
    for (int i = 0; i < r; ++i) {
      if (idx[static_cast<std::size_t>(i)] != idx[static_cast<std::size_t>(r + i)]) {
        diag = false;
        break;
      }
    }
    if (diag) out[flat] = ring.one();
    ++flat;
  } while (next_index(idx, out.shape()));
  return out;
}

Tensor zero_tensor(const Semiring& ring, const Shape& shape) {
  return Tensor(ring, shape);
}

Tensor scalar_tensor(const Semiring& ring, Value v) {
  Tensor out(ring, Shape{});
  out[0] = std::move(v);
  return out;
}

bool tensor_approx_eq(const Tensor& a, const Tensor& b, double tol) {
  if (&a.ring() != &b.ring() || !a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.ring().approx_eq(a[i], b[i], tol)) return false;
  }
  return true;
}

std::string to_string(const Tensor& t) {
  std::string out = "[";
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ", ";
    out += t.ring().format_value(t[i]);
  }
  return out + "]";
}

}  // namespace lvsp
