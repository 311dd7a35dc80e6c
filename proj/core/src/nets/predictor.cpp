#include "locjepa/nets/predictor.hpp"

#include <set>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/tokenizer/positional.hpp"

namespace locjepa::nets {

template <class Real>
Predictor<Real>::Predictor(ParamStore<Real>& store, const std::string& prefix,
                           const ModelConfig& config, const tok::TokenGrid& grid, Rng& rng)
    : grid_(grid) {
  const ModelConfig cfg = config.resolved();
  cfg.validate();
  dim_ = cfg.predictor.dim;
  const auto d = cfg.encoder.embed_dim;
  embed_ = Linear<Real>::create(store, prefix + ".embed", d, dim_, rng);
  mask_token_ = store.add(prefix + ".mask_token", init::trunc_normal<Real>({dim_}, 0.02, rng));
  for (std::size_t b = 0; b < cfg.predictor.depth; ++b) {
    blocks_.push_back(TransformerBlock<Real>::create(store, prefix + ".blocks." + std::to_string(b),
                                                     dim_, cfg.predictor.heads,
                                                     cfg.encoder.mlp_ratio, rng));
  }
  norm_ = LayerNorm<Real>::create(store, prefix + ".norm", dim_);
  proj_ = Linear<Real>::create(store, prefix + ".proj", dim_, d, rng);
  positions_ = tok::positional_embedding<Real>(grid_, dim_);
}

template <class Real>
EmbeddingSeq<Real> Predictor<Real>::predict(const EmbeddingSeq<Real>& context,
                                            std::span<const std::size_t> masked_positions) const {
  if (masked_positions.empty()) throw ShapeError("predictor: no masked positions");
  if (context.positions.empty()) throw ShapeError("predictor: empty context");
  std::set<std::size_t> ctx(context.positions.begin(), context.positions.end());
  for (auto p : masked_positions) {
    if (p >= grid_.count()) throw ShapeError("predictor: masked position out of range");
    if (ctx.contains(p)) {
      throw ShapeError("predictor: masked position " + std::to_string(p) +
                       " is also a context position");
    }
  }
  auto pos_var = [this](std::span<const std::size_t> idx) {
    return Var<Real>::leaf(tok::positional_rows<Real>(grid_, dim_, idx));
  };
  const auto ctx_tokens = diff::add(embed_(context.embeddings), pos_var(context.positions));
  const auto queries = diff::add_row(pos_var(masked_positions), mask_token_);
  const std::vector<Var<Real>> parts{ctx_tokens, queries};
  auto x = diff::concat_rows<Real>(parts);
  for (const auto& block : blocks_) x = block(x);

  const auto n_ctx = context.positions.size();
  std::vector<std::size_t> rows(masked_positions.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = n_ctx + k;
  const auto out = proj_(norm_(diff::gather_rows(x, rows)));
  return {out, std::vector<std::size_t>(masked_positions.begin(), masked_positions.end())};
}

template <class Real>
LocalisationMlp<Real>::LocalisationMlp(ParamStore<Real>& store, const std::string& prefix,
                                       std::size_t embed_dim, Rng& rng) {
  if (embed_dim < 2) throw UsageError("localisation MLP: embed_dim must be >= 2");
  fc1_ = Linear<Real>::create(store, prefix + ".fc1", 2 * embed_dim, embed_dim, rng);
  fc2_ = Linear<Real>::create(store, prefix + ".fc2", embed_dim, embed_dim / 2, rng);
  fc3_ = Linear<Real>::create(store, prefix + ".fc3", embed_dim / 2, 3, rng);
}

template <class Real>
Var<Real> LocalisationMlp<Real>::operator()(const Var<Real>& pairs) const {
  if (pairs.shape().size() != 2 || pairs.dim(1) != fc1_.in()) {
    throw ShapeError("localisation MLP: expected [n, " + std::to_string(fc1_.in()) + "], got " +
                     to_string(pairs.shape()));
  }
  return fc3_(diff::gelu(fc2_(diff::gelu(fc1_(pairs)))));
}

template class Predictor<float>;
template class Predictor<double>;
template class LocalisationMlp<float>;
template class LocalisationMlp<double>;

}  // namespace locjepa::nets
