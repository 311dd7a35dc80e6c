#include "locjepa/nets/model.hpp"

#include "locjepa/diff/ops.hpp"

namespace locjepa::nets {

template <class Real>
PretrainModel<Real>::PretrainModel(const ModelConfig& cfg, const tok::TokenGrid& g,
                                   std::uint64_t seed)
    : config(cfg.resolved()), grid(g) {
  config.validate();
  grid.embed_dim = config.encoder.embed_dim;
  Rng rng(seed);
  encoder = std::make_unique<VisionEncoder<Real>>(online, "encoder", config.encoder, grid, rng);
  predictor = std::make_unique<Predictor<Real>>(online, "predictor", config, grid, rng);
  loc = std::make_unique<LocalisationMlp<Real>>(online, "loc", config.encoder.embed_dim, rng);
  Rng scratch(seed ^ 0x9e3779b97f4a7c15ULL);
  target_encoder =
      std::make_unique<VisionEncoder<Real>>(target, "encoder", config.encoder, grid, scratch);
  target.copy_values_from(online);
  target.set_trainable("", false);
  encoder->apply_freeze(online);
}

template <class Real>
ProbeModel<Real>::ProbeModel(const ModelConfig& cfg, const tok::TokenGrid& g, std::uint64_t seed)
    : config(cfg.resolved()), grid(g) {
  config.validate();
  grid.embed_dim = config.encoder.embed_dim;
  Rng rng(seed);
  encoder = std::make_unique<VisionEncoder<Real>>(encoder_params, "encoder", config.encoder, grid,
                                                  rng);
  encoder_params.set_trainable("", false);
  probe = std::make_unique<AttentiveProbe<Real>>(head_params, "probe", config, grid, rng);
  decoder = std::make_unique<SegDecoder<Real>>(head_params, "decoder", config.probe.dim,
                                               config.probe.num_classes + 1, grid, rng);
}

template <class Real>
EmbeddingSeq<Real> ProbeModel<Real>::frozen_features(const Tensor<float>& clip) const {
  diff::NoGradGuard no_grad;
  const auto tokens = encoder->embed(clip);
  auto out = encoder->encode(tokens, tokens.positions);
  out.embeddings = diff::detach(out.embeddings);
  return out;
}

template <class Real>
Var<Real> ProbeModel<Real>::logits(const EmbeddingSeq<Real>& frozen) const {
  return (*decoder)((*probe)(frozen));
}

template struct PretrainModel<float>;
template struct PretrainModel<double>;
template struct ProbeModel<float>;
template struct ProbeModel<double>;

}  // namespace locjepa::nets
