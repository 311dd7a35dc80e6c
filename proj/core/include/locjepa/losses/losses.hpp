#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "locjepa/common/rng.hpp"
#include "locjepa/nets/model.hpp"
#include "locjepa/tokenizer/masking.hpp"

namespace locjepa::losses {

template <class Real>
using Var = diff::Var<Real>;
template <class Real>
using EmbeddingSeq = nets::EmbeddingSeq<Real>;

/// Ordered pair of masked tokens, as flat grid indices.
struct TokenPair {
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  bool operator==(const TokenPair&) const = default;
};

struct LossBreakdown {
  double jepa = 0.0;
  double local = 0.0;
  double combined = 0.0;
  double lambda = 0.0;
};

/// Mean |pred - target| over every row and column of every item. Rows must
/// carry identical positions item by item.
template <class Real>
Var<Real> jepa_loss(std::span<const EmbeddingSeq<Real>> pred,
                    std::span<const EmbeddingSeq<Real>> target);
template <class Real>
Var<Real> jepa_loss(const EmbeddingSeq<Real>& pred, const EmbeddingSeq<Real>& target);

/// `n_pairs` ordered pairs drawn uniformly (with replacement) from the masked
/// set; m2 is redrawn while it equals m1 unless `allow_self`.
std::vector<TokenPair> sample_pairs(const tok::MaskPartition& mask, std::size_t n_pairs, Rng& rng,
                                    bool allow_self = false);

/// ((t1-t2)/t, (i1-i2)/i, (j1-j2)/j)
std::array<double, 3> relative_offset(const tok::TokenIndex& m1, const tok::TokenIndex& m2,
                                      const tok::TokenGrid& grid);

/// Pair inputs [n, 2D] = [e(m1); e(m2)] taken from rows of `seq` by position.
template <class Real>
Var<Real> pair_inputs(const EmbeddingSeq<Real>& seq, std::span<const TokenPair> pairs);

/// Offset targets [n, 3] for the pairs.
template <class Real>
Tensor<Real> pair_targets(std::span<const TokenPair> pairs, const tok::TokenGrid& grid);

/// sum over items and pairs of ||F([e1;e2]) - delta||^2, divided by the
/// total pair count. `inputs[b]` is [n_b, 2D], `targets[b]` is [n_b, 3].
template <class Real>
Var<Real> localisation_loss(const nets::LocalisationMlp<Real>& mlp,
                            std::span<const Var<Real>> inputs,
                            std::span<const Tensor<Real>> targets);

template <class Real>
Var<Real> combined_loss(const Var<Real>& jepa, const Var<Real>& local, double lambda);
double combined_loss(double jepa, double local, double lambda);

/// One clip of a pretraining batch with its mask and localisation pairs.
struct PretrainItem {
  Tensor<float> clip;
  tok::MaskPartition mask;
  std::vector<TokenPair> pairs;
};

template <class Real>
struct PretrainLoss {
  Var<Real> jepa;
  Var<Real> local;
  Var<Real> combined;
  double lambda = 0.0;

  LossBreakdown breakdown() const;
};

/// Full objective for a batch: context/target encoders, predictor, pairs, F.
template <class Real>
PretrainLoss<Real> pretrain_loss(const nets::PretrainModel<Real>& model,
                                 std::span<const PretrainItem> batch, double lambda);

}  // namespace locjepa::losses
