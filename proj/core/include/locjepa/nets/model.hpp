#pragma once

#include <cstdint>
#include <memory>

#include "locjepa/nets/predictor.hpp"
#include "locjepa/nets/probe.hpp"

namespace locjepa::nets {

/// Online encoder, EMA target encoder, predictor and localisation MLP.
/// Online names: "encoder.*", "predictor.*", "loc.*"; target: "encoder.*".
template <class Real>
struct PretrainModel {
  PretrainModel(const ModelConfig& config, const tok::TokenGrid& grid, std::uint64_t seed);
  PretrainModel(const PretrainModel&) = delete;
  PretrainModel& operator=(const PretrainModel&) = delete;

  ModelConfig config;
  tok::TokenGrid grid;
  ParamStore<Real> online;
  ParamStore<Real> target;
  std::unique_ptr<VisionEncoder<Real>> encoder;
  std::unique_ptr<VisionEncoder<Real>> target_encoder;
  std::unique_ptr<Predictor<Real>> predictor;
  std::unique_ptr<LocalisationMlp<Real>> loc;
};

/// Frozen encoder plus trainable probe and decoder.
/// Encoder names: "encoder.*"; head names: "probe.*", "decoder.*".
template <class Real>
struct ProbeModel {
  ProbeModel(const ModelConfig& config, const tok::TokenGrid& grid, std::uint64_t seed);
  ProbeModel(const ProbeModel&) = delete;
  ProbeModel& operator=(const ProbeModel&) = delete;

  ModelConfig config;
  tok::TokenGrid grid;
  ParamStore<Real> encoder_params;
  ParamStore<Real> head_params;
  std::unique_ptr<VisionEncoder<Real>> encoder;
  std::unique_ptr<AttentiveProbe<Real>> probe;
  std::unique_ptr<SegDecoder<Real>> decoder;

  /// Frozen encoder features for a full clip (no graph recorded).
  EmbeddingSeq<Real> frozen_features(const Tensor<float>& clip) const;
  /// Logits [T*H*W, C] from precomputed frozen features.
  Var<Real> logits(const EmbeddingSeq<Real>& frozen) const;
};

}  // namespace locjepa::nets
