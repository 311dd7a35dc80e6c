#include "locjepa/nets/config.hpp"

#include <algorithm>
#include <string>

#include "locjepa/common/error.hpp"

namespace locjepa::nets {

void ViTConfig::validate() const {
  if (embed_dim == 0 || heads == 0 || embed_dim % heads != 0) {
    throw UsageError("encoder: embed_dim " + std::to_string(embed_dim) +
                     " must be a positive multiple of heads " + std::to_string(heads));
  }
  if (frozen_blocks > depth) {
    throw UsageError("encoder: frozen_blocks " + std::to_string(frozen_blocks) +
                     " exceeds depth " + std::to_string(depth));
  }
  if (!(mlp_ratio > 0.0)) throw UsageError("encoder: mlp_ratio must be positive");
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig r = *this;
  if (r.predictor.depth == 0) r.predictor.depth = std::max<std::size_t>(2, encoder.depth / 6);
  if (r.predictor.dim == 0) r.predictor.dim = encoder.embed_dim / 2;
  if (r.predictor.heads == 0) r.predictor.heads = encoder.heads;
  if (r.probe.dim == 0) r.probe.dim = encoder.embed_dim;
  if (r.probe.heads == 0) r.probe.heads = encoder.heads;
  return r;
}

void ModelConfig::validate() const {
  encoder.validate();
  const ModelConfig r = resolved();
  if (r.predictor.dim % r.predictor.heads != 0) {
    throw UsageError("predictor: dim " + std::to_string(r.predictor.dim) +
                     " not divisible by heads " + std::to_string(r.predictor.heads));
  }
  if (r.predictor.dim % 4 != 0) {
    throw UsageError("predictor: dim " + std::to_string(r.predictor.dim) +
                     " must be divisible by 4 for positional bands");
  }
  if (encoder.embed_dim % 4 != 0) {
    throw UsageError("encoder: embed_dim " + std::to_string(encoder.embed_dim) +
                     " must be divisible by 4 for positional bands");
  }
  if (encoder.embed_dim < 2) throw UsageError("encoder: embed_dim too small");
  if (r.probe.dim < 2 || r.probe.num_classes == 0) {
    throw UsageError("probe: dim must be >= 2 and num_classes >= 1");
  }
}

}  // namespace locjepa::nets
