#include "locjepa/nets/probe.hpp"

#include <cmath>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/tokenizer/positional.hpp"

namespace locjepa::nets {

template <class Real>
AttentiveProbe<Real>::AttentiveProbe(ParamStore<Real>& store, const std::string& prefix,
                                     const ModelConfig& config, const tok::TokenGrid& grid,
                                     Rng& rng)
    : grid_(grid) {
  const ModelConfig cfg = config.resolved();
  const auto d = cfg.encoder.embed_dim;
  queries_ = store.add(prefix + ".queries", tok::positional_embedding<Real>(grid_, d));
  norm_q_ = LayerNorm<Real>::create(store, prefix + ".norm_q", d);
  norm_kv_ = LayerNorm<Real>::create(store, prefix + ".norm_kv", d);
  attn_ = CrossAttention<Real>::create(store, prefix + ".attn", d, cfg.probe.heads, rng);
  norm_mlp_ = LayerNorm<Real>::create(store, prefix + ".norm_mlp", d);
  mlp_ = Mlp<Real>::create(store, prefix + ".mlp", d,
                           static_cast<std::size_t>(std::llround(double(d) * cfg.probe.mlp_ratio)),
                           rng);
  head_ = Linear<Real>::create(store, prefix + ".head", d, cfg.probe.dim, rng);
}

template <class Real>
Var<Real> AttentiveProbe<Real>::operator()(const EmbeddingSeq<Real>& frozen) const {
  if (frozen.positions.size() != grid_.count() || frozen.embeddings.dim(0) != grid_.count()) {
    throw ShapeError("attentive probe: expected " + std::to_string(grid_.count()) +
                     " frozen tokens, got " + std::to_string(frozen.positions.size()));
  }
  if (frozen.embeddings.dim(1) != queries_.dim(1)) {
    throw ShapeError("attentive probe: token width mismatch");
  }
  const auto x = diff::add(queries_, attn_(norm_q_(queries_), norm_kv_(frozen.embeddings)));
  const auto h = diff::add(x, mlp_(norm_mlp_(x)));
  return head_(h);
}

std::size_t decoder_stride(const tok::TokenGrid& grid) {
  if (grid.patch_h != grid.patch_w) {
    throw UsageError("segmentation decoder: patch must be square, got " +
                     std::to_string(grid.patch_h) + "x" + std::to_string(grid.patch_w));
  }
  const auto s = static_cast<std::size_t>(std::llround(std::sqrt(double(grid.patch_h))));
  if (s * s != grid.patch_h || s == 0) {
    throw UsageError("segmentation decoder: patch size " + std::to_string(grid.patch_h) +
                     " is not a perfect square");
  }
  return s;
}

template <class Real>
SegDecoder<Real>::SegDecoder(ParamStore<Real>& store, const std::string& prefix,
                             std::size_t in_dim, std::size_t classes, const tok::TokenGrid& grid,
                             Rng& rng)
    : grid_(grid), stride_(decoder_stride(grid)), classes_(classes) {
  if (in_dim < 2) throw UsageError("segmentation decoder: input width must be >= 2");
  const auto mid = in_dim / 2;
  const auto k = stride_;
  w1_ = store.add(prefix + ".conv1.weight",
                  init::uniform<Real>({in_dim, mid, k, k}, 1.0 / std::sqrt(double(in_dim)), rng));
  b1_ = store.add(prefix + ".conv1.bias", init::zeros<Real>({mid}));
  w2_ = store.add(prefix + ".conv2.weight",
                  init::uniform<Real>({mid, classes, k, k}, 1.0 / std::sqrt(double(mid)), rng));
  b2_ = store.add(prefix + ".conv2.bias", init::zeros<Real>({classes}));
}

template <class Real>
Var<Real> SegDecoder<Real>::operator()(const Var<Real>& features) const {
  const auto cells = grid_.i * grid_.j;
  if (features.shape().size() != 2 || features.dim(0) != grid_.t * cells ||
      features.dim(1) != w1_.dim(0)) {
    throw ShapeError("segmentation decoder: expected [" + std::to_string(grid_.t * cells) + ", " +
                     std::to_string(w1_.dim(0)) + "], got " + to_string(features.shape()));
  }
  const auto hw = grid_.height() * grid_.width();
  std::vector<Var<Real>> frames;
  frames.reserve(grid_.frames());
  std::vector<std::size_t> rows(cells);
  for (std::size_t t = 0; t < grid_.t; ++t) {
    for (std::size_t c = 0; c < cells; ++c) rows[c] = t * cells + c;
    const auto slot = diff::transpose(diff::gather_rows(features, rows));  // [D_p, i*j]
    const auto img = diff::reshape(slot, {features.dim(1), grid_.i, grid_.j});
    const auto up = diff::gelu(diff::conv_transpose2d(img, w1_, b1_, stride_));
    const auto logits = diff::conv_transpose2d(up, w2_, b2_, stride_);  // [C, H, W]
    const auto per_pixel = diff::transpose(diff::reshape(logits, {classes_, hw}));
    for (std::size_t f = 0; f < grid_.tubelet_frames; ++f) frames.push_back(per_pixel);
  }
  return diff::concat_rows<Real>(frames);
}

template class AttentiveProbe<float>;
template class AttentiveProbe<double>;
template class SegDecoder<float>;
template class SegDecoder<double>;

}  // namespace locjepa::nets
