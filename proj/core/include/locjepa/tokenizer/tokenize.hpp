#pragma once

#include "locjepa/diff/autograd.hpp"
#include "locjepa/diff/tensor.hpp"
#include "locjepa/tokenizer/grid.hpp"

namespace locjepa::tok {

/// Flattened non-overlapping tubelets, one row per token: [count, patch_volume].
/// Within a row the layout is (frame, row, col).
template <class Real>
Tensor<Real> extract_patches(const Tensor<float>& clip, const TokenGrid& grid);

/// Inverse of extract_patches.
template <class Real>
Tensor<Real> assemble_patches(const Tensor<Real>& patches, const TokenGrid& grid);

/// Zero-mean, unit-variance copy of a clip (a constant clip maps to zeros).
Tensor<float> standardize_clip(const Tensor<float>& clip);

/// Linear projection of every tubelet to `grid.embed_dim`; no positions added.
/// weight [patch_volume, D], bias [D].
template <class Real>
diff::Var<Real> tokenize(const Tensor<float>& clip, const TokenGrid& grid,
                         const diff::Var<Real>& weight, const diff::Var<Real>& bias);

}  // namespace locjepa::tok
