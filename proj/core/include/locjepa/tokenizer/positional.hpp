#pragma once

#include <cstddef>
#include <span>

#include "locjepa/diff/tensor.hpp"
#include "locjepa/tokenizer/grid.hpp"

namespace locjepa::tok {

/// Widths of the temporal, vertical and horizontal sin-cos bands for a
/// `dim`-wide embedding: dim/2, dim/4, dim/4. Throws when dim % 4 != 0.
struct BandSplit {
  std::size_t temporal, vertical, horizontal;
};
BandSplit band_split(std::size_t dim);

/// Fixed 3D sin-cos embedding, one row per token in row-major (t, i, j)
/// order. Each band of width w holds floor(w/2) (sin, cos) pairs; an odd
/// trailing channel is zero.
template <class Real>
Tensor<Real> positional_embedding(const TokenGrid& grid, std::size_t dim);

/// Rows of the embedding for the given flat token indices, in order.
template <class Real>
Tensor<Real> positional_rows(const TokenGrid& grid, std::size_t dim,
                             std::span<const std::size_t> tokens);

}  // namespace locjepa::tok
