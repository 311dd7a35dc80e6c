#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "locjepa/nets/config.hpp"
#include "locjepa/nets/layers.hpp"
#include "locjepa/tokenizer/grid.hpp"
#include "locjepa/tokenizer/masking.hpp"

namespace locjepa::nets {

/// Token embeddings [n, D] with the flat grid index of each row.
template <class Real>
struct EmbeddingSeq {
  Var<Real> embeddings;
  std::vector<std::size_t> positions;

  std::size_t size() const { return positions.size(); }
  /// Throws unless positions match the row count and are unique.
  void validate() const;
};

/// ViT context/target encoder: patch projection, fixed 3D positions, blocks.
template <class Real>
class VisionEncoder {
 public:
  VisionEncoder(ParamStore<Real>& store, const std::string& prefix, const ViTConfig& config,
                const tok::TokenGrid& grid, Rng& rng);

  /// Tubelet tokens for a clip, full grid, positions not yet added.
  EmbeddingSeq<Real> embed(const Tensor<float>& clip) const;

  /// Adds positions, keeps the listed tokens (by flat index), runs the trunk.
  EmbeddingSeq<Real> encode(const EmbeddingSeq<Real>& tokens,
                            std::span<const std::size_t> keep) const;

  /// Disables gradients of the frozen part: the patch projection when any
  /// block is frozen, blocks [0, frozen_blocks), the final norm when all are.
  void apply_freeze(ParamStore<Real>& store) const;

  const ViTConfig& config() const { return config_; }
  const tok::TokenGrid& grid() const { return grid_; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  ViTConfig config_;
  tok::TokenGrid grid_;
  Var<Real> patch_weight_;
  Var<Real> patch_bias_;
  std::vector<TransformerBlock<Real>> blocks_;
  LayerNorm<Real> norm_;
  Var<Real> positions_;  // constant [count, D]
};

/// Context branch: drop masked tokens and encode the visible ones.
template <class Real>
EmbeddingSeq<Real> encode_context(const VisionEncoder<Real>& encoder,
                                  const EmbeddingSeq<Real>& tokens,
                                  const tok::MaskPartition& mask);

/// Target branch: encode the full clip, keep masked rows, normalise each row,
/// and cut the graph (no gradient reaches the target parameters).
template <class Real>
EmbeddingSeq<Real> encode_target(const VisionEncoder<Real>& target,
                                 const EmbeddingSeq<Real>& tokens,
                                 const tok::MaskPartition& mask);

/// target <- m * target + (1 - m) * online for every target entry, matched by name.
template <class Real>
void ema_update(ParamStore<Real>& target, const ParamStore<Real>& online, double momentum);

}  // namespace locjepa::nets
