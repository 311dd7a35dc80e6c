#pragma once

#include <string>

#include "locjepa/nets/encoder.hpp"

namespace locjepa::nets {

/// One learnable query per grid position (initialised from the positional
/// embedding) cross-attending over frozen tokens, then an MLP and a linear
/// head. Output rows follow the grid's row-major (t, i, j) order.
template <class Real>
class AttentiveProbe {
 public:
  AttentiveProbe(ParamStore<Real>& store, const std::string& prefix, const ModelConfig& config,
                 const tok::TokenGrid& grid, Rng& rng);

  /// frozen [count, D] (any order) -> features [t*i*j, D_p]
  Var<Real> operator()(const EmbeddingSeq<Real>& frozen) const;

  std::size_t out_dim() const { return head_.out(); }

 private:
  tok::TokenGrid grid_;
  Var<Real> queries_;
  LayerNorm<Real> norm_q_, norm_kv_, norm_mlp_;
  CrossAttention<Real> attn_;
  Mlp<Real> mlp_;
  Linear<Real> head_;
};

/// Side of the per-layer upsampling factor: patch = s * s on both axes.
std::size_t decoder_stride(const tok::TokenGrid& grid);

/// Two stride-s transposed convolutions per temporal slot (D_p -> D_p/2 -> C)
/// with GELU between; each slot's logits repeat for its frames.
template <class Real>
class SegDecoder {
 public:
  SegDecoder(ParamStore<Real>& store, const std::string& prefix, std::size_t in_dim,
             std::size_t classes, const tok::TokenGrid& grid, Rng& rng);

  /// features [t*i*j, D_p] -> logits [T*H*W, C] (row-major over T, H, W)
  Var<Real> operator()(const Var<Real>& features) const;

  std::size_t classes() const { return classes_; }

 private:
  tok::TokenGrid grid_;
  std::size_t stride_;
  std::size_t classes_;
  Var<Real> w1_, b1_, w2_, b2_;
};

}  // namespace locjepa::nets
