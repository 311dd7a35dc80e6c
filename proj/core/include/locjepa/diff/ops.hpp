#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "locjepa/diff/autograd.hpp"

namespace locjepa::diff {

/// Names of every differentiable primitive the engine provides.
const std::set<std::string>& required_ops();

/// Throws UsageError when `name` is not a supported primitive.
void require_op(std::string_view name);

// All matrices are rank-2 row-major [rows, cols]; "row vectors" are rank-1.

template <class Real> Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> scale(const Var<Real>& a, Real s);
/// a[r, c] + row[c]
template <class Real> Var<Real> add_row(const Var<Real>& a, const Var<Real>& row);
/// a[r, c] * row[c]
template <class Real> Var<Real> mul_row(const Var<Real>& a, const Var<Real>& row);
/// Exact (erf) GELU.
template <class Real> Var<Real> gelu(const Var<Real>& a);
/// Softmax over the last axis.
template <class Real> Var<Real> softmax(const Var<Real>& a);
/// Per-row standardisation over the last axis (no affine part).
template <class Real> Var<Real> layer_norm(const Var<Real>& a, Real eps = Real(1e-6));
template <class Real> Var<Real> sum(const Var<Real>& a);
template <class Real> Var<Real> mean(const Var<Real>& a);
/// sum |a - b|; the subgradient at a == b is 0.
template <class Real> Var<Real> l1_diff(const Var<Real>& a, const Var<Real>& b);
/// sum (a - b)^2
template <class Real> Var<Real> squared_l2_diff(const Var<Real>& a, const Var<Real>& b);
template <class Real> Var<Real> concat_rows(std::span<const Var<Real>> parts);
template <class Real> Var<Real> concat_cols(std::span<const Var<Real>> parts);
template <class Real> Var<Real> gather_rows(const Var<Real>& a, std::span<const std::size_t> rows);
/// Columns [begin, end) of a rank-2 input.
template <class Real> Var<Real> slice_cols(const Var<Real>& a, std::size_t begin, std::size_t end);
template <class Real> Var<Real> reshape(const Var<Real>& a, Shape shape);
template <class Real> Var<Real> transpose(const Var<Real>& a);
/// x [Cin, H, W], w [Cin, Cout, k, k], bias [Cout] -> [Cout, (H-1)s+k, (W-1)s+k]
template <class Real>
Var<Real> conv_transpose2d(const Var<Real>& x, const Var<Real>& w, const Var<Real>& bias,
                           std::size_t stride);
/// Mean softmax cross-entropy of logits [N, C] against class labels.
template <class Real>
Var<Real> cross_entropy(const Var<Real>& logits, std::span<const std::int32_t> labels);
/// Stop-gradient: same value, no path back to `a`.
template <class Real> Var<Real> detach(const Var<Real>& a);

}  // namespace locjepa::diff
