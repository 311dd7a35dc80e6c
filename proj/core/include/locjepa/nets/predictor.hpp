#pragma once

#include <span>
#include <string>
#include <vector>

#include "locjepa/nets/encoder.hpp"

namespace locjepa::nets {

/// Narrow ViT that maps context embeddings plus one positioned mask query per
/// target token to predicted target embeddings.
template <class Real>
class Predictor {
 public:
  Predictor(ParamStore<Real>& store, const std::string& prefix, const ModelConfig& config,
            const tok::TokenGrid& grid, Rng& rng);

  /// Predictions for `masked_positions`, in that order, width = encoder dim.
  EmbeddingSeq<Real> predict(const EmbeddingSeq<Real>& context,
                             std::span<const std::size_t> masked_positions) const;

  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  tok::TokenGrid grid_;
  Linear<Real> embed_;
  Var<Real> mask_token_;
  std::vector<TransformerBlock<Real>> blocks_;
  LayerNorm<Real> norm_;
  Linear<Real> proj_;
  Tensor<Real> positions_;  // [count, dim]
};

/// Three-layer regressor from a concatenated embedding pair [e1; e2] to a
/// relative (t, i, j) offset: 2D -> D -> D/2 -> 3, GELU between, linear out.
template <class Real>
class LocalisationMlp {
 public:
  LocalisationMlp(ParamStore<Real>& store, const std::string& prefix, std::size_t embed_dim,
                  Rng& rng);

  /// pairs [n, 2D] -> offsets [n, 3]
  Var<Real> operator()(const Var<Real>& pairs) const;

  std::size_t input_width() const { return fc1_.in(); }

 private:
  Linear<Real> fc1_, fc2_, fc3_;
};

}  // namespace locjepa::nets
