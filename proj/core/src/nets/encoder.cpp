#include "locjepa/nets/encoder.hpp"

#include <cmath>
#include <set>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/tokenizer/positional.hpp"
#include "locjepa/tokenizer/tokenize.hpp"

namespace locjepa::nets {

template <class Real>
void EmbeddingSeq<Real>::validate() const {
  if (!embeddings.defined() || embeddings.shape().size() != 2 ||
      embeddings.dim(0) != positions.size()) {
    throw ShapeError("embedding sequence: row count does not match positions");
  }
  std::set<std::size_t> unique(positions.begin(), positions.end());
  if (unique.size() != positions.size()) {
    throw ShapeError("embedding sequence: repeated positions");
  }
}

template <class Real>
VisionEncoder<Real>::VisionEncoder(ParamStore<Real>& store, const std::string& prefix,
                                   const ViTConfig& config, const tok::TokenGrid& grid, Rng& rng)
    : prefix_(prefix), config_(config), grid_(grid) {
  config_.validate();
  grid_.embed_dim = config.embed_dim;
  const auto d = config.embed_dim;
  const auto fan_in = grid_.patch_volume();
  patch_weight_ = store.add(prefix + ".patch.weight",
                            init::uniform<Real>({fan_in, d}, 1.0 / std::sqrt(double(fan_in)), rng));
  patch_bias_ = store.add(prefix + ".patch.bias", init::zeros<Real>({d}));
  for (std::size_t b = 0; b < config.depth; ++b) {
    blocks_.push_back(TransformerBlock<Real>::create(
        store, prefix + ".blocks." + std::to_string(b), d, config.heads, config.mlp_ratio, rng));
  }
  if (config.depth > 0) norm_ = LayerNorm<Real>::create(store, prefix + ".norm", d);
  positions_ = Var<Real>::leaf(tok::positional_embedding<Real>(grid_, d));
}

template <class Real>
EmbeddingSeq<Real> VisionEncoder<Real>::embed(const Tensor<float>& clip) const {
  EmbeddingSeq<Real> out{tok::tokenize(tok::standardize_clip(clip), grid_, patch_weight_, patch_bias_), {}};
  out.positions.resize(grid_.count());
  for (std::size_t k = 0; k < out.positions.size(); ++k) out.positions[k] = k;
  return out;
}

template <class Real>
EmbeddingSeq<Real> VisionEncoder<Real>::encode(const EmbeddingSeq<Real>& tokens,
                                               std::span<const std::size_t> keep) const {
  if (keep.empty()) throw ShapeError("encoder: no tokens to encode");
  if (tokens.embeddings.dim(1) != config_.embed_dim) {
    throw ShapeError("encoder: token width " + std::to_string(tokens.embeddings.dim(1)) +
                     " differs from embed_dim " + std::to_string(config_.embed_dim));
  }
  std::vector<std::ptrdiff_t> row_of(grid_.count(), -1);
  for (std::size_t r = 0; r < tokens.positions.size(); ++r) row_of.at(tokens.positions[r]) = r;
  std::vector<std::size_t> rows(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= grid_.count() || row_of[keep[k]] < 0) {
      throw ShapeError("encoder: requested token " + std::to_string(keep[k]) + " is not present");
    }
    rows[k] = static_cast<std::size_t>(row_of[keep[k]]);
  }
  auto x = diff::add(diff::gather_rows(tokens.embeddings, rows),
                     diff::gather_rows(positions_, keep));
  for (const auto& block : blocks_) x = block(x);
  if (!blocks_.empty()) x = norm_(x);
  return {x, std::vector<std::size_t>(keep.begin(), keep.end())};
}

template <class Real>
void VisionEncoder<Real>::apply_freeze(ParamStore<Real>& store) const {
  const auto k = config_.frozen_blocks;
  if (k == 0) return;
  store.set_trainable(prefix_ + ".patch.", false);
  for (std::size_t b = 0; b < k; ++b) {
    store.set_trainable(prefix_ + ".blocks." + std::to_string(b) + ".", false);
  }
  if (k == config_.depth) store.set_trainable(prefix_ + ".norm.", false);
}

template <class Real>
EmbeddingSeq<Real> encode_context(const VisionEncoder<Real>& encoder,
                                  const EmbeddingSeq<Real>& tokens,
                                  const tok::MaskPartition& mask) {
  if (mask.visible.empty()) throw ShapeError("encode_context: no visible tokens");
  return encoder.encode(tokens, mask.visible);
}

template <class Real>
EmbeddingSeq<Real> encode_target(const VisionEncoder<Real>& target,
                                 const EmbeddingSeq<Real>& tokens,
                                 const tok::MaskPartition& mask) {
  if (mask.masked.empty()) throw ShapeError("encode_target: no masked tokens");
  diff::NoGradGuard no_grad;
  std::vector<std::size_t> all(target.grid().count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  const auto full = target.encode(tokens, all);
  const auto kept = diff::layer_norm(diff::gather_rows(full.embeddings, mask.masked));
  return {diff::detach(kept), mask.masked};
}

template <class Real>
void ema_update(ParamStore<Real>& target, const ParamStore<Real>& online, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw UsageError("ema_update: momentum must lie in [0, 1]");
  }
  for (auto& e : target.entries()) {
    const auto src = online.get(e.name);
    if (src.shape() != e.var.shape()) {
      throw ShapeError("ema_update: '" + e.name + "' shape " + to_string(e.var.shape()) +
                       " vs " + to_string(src.shape()));
    }
    auto dst = e.var.mutable_value();
    const auto s = src.value();
    if (momentum == 1.0) continue;
    for (std::size_t k = 0; k < dst.size(); ++k) {
      dst[k] = static_cast<Real>(momentum * double(dst[k]) + (1.0 - momentum) * double(s[k]));
    }
  }
}

#define LOCJEPA_INSTANTIATE_ENCODER(R)                                                   \
  template struct EmbeddingSeq<R>;                                                       \
  template class VisionEncoder<R>;                                                       \
  template EmbeddingSeq<R> encode_context(const VisionEncoder<R>&, const EmbeddingSeq<R>&, \
                                          const tok::MaskPartition&);                    \
  template EmbeddingSeq<R> encode_target(const VisionEncoder<R>&, const EmbeddingSeq<R>&,  \
                                         const tok::MaskPartition&);                     \
  template void ema_update(ParamStore<R>&, const ParamStore<R>&, double);

LOCJEPA_INSTANTIATE_ENCODER(float)
LOCJEPA_INSTANTIATE_ENCODER(double)

}  // namespace locjepa::nets
