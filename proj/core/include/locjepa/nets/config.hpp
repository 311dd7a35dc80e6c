#pragma once

#include <cstddef>

namespace locjepa::nets {

struct ViTConfig {
  std::size_t depth = 4;
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  double mlp_ratio = 4.0;
  std::size_t frozen_blocks = 0;

  void validate() const;
};

/// Zero fields resolve to defaults derived from the encoder.
struct PredictorConfig {
  std::size_t depth = 0;  // max(2, encoder depth / 6)
  std::size_t dim = 0;    // encoder dim / 2
  std::size_t heads = 0;  // encoder heads
};

struct ProbeConfig {
  std::size_t dim = 0;    // encoder dim
  std::size_t heads = 0;  // encoder heads
  double mlp_ratio = 4.0;
  std::size_t num_classes = 3;  // foreground classes; logits carry num_classes + 1
};

struct ModelConfig {
  ViTConfig encoder;
  PredictorConfig predictor;
  ProbeConfig probe;

  /// Copy with every zero field replaced by its derived default.
  ModelConfig resolved() const;
  void validate() const;
};

}  // namespace locjepa::nets
