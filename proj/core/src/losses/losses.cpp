#include "locjepa/losses/losses.hpp"

#include <string>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"

namespace locjepa::losses {
namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw UsageError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

}  // namespace

template <class Real>
Var<Real> jepa_loss(std::span<const EmbeddingSeq<Real>> pred,
                    std::span<const EmbeddingSeq<Real>> target) {
  if (pred.empty() || pred.size() != target.size()) {
    throw ShapeError("jepa_loss: prediction and target batches differ in size");
  }
  Var<Real> total;
  std::size_t count = 0;
  for (std::size_t b = 0; b < pred.size(); ++b) {
    if (pred[b].positions != target[b].positions) {
      throw ShapeError("jepa_loss: item " + std::to_string(b) +
                       ": prediction and target positions differ");
    }
    if (pred[b].embeddings.shape() != target[b].embeddings.shape()) {
      throw ShapeError("jepa_loss: item " + std::to_string(b) + ": shapes " +
                       to_string(pred[b].embeddings.shape()) + " vs " +
                       to_string(target[b].embeddings.shape()));
    }
    const auto term = diff::l1_diff(pred[b].embeddings, target[b].embeddings);
    total = total.defined() ? diff::add(total, term) : term;
    count += pred[b].embeddings.size();
  }
  if (count == 0) throw ShapeError("jepa_loss: no masked tokens");
  return diff::scale(total, Real(1.0 / double(count)));
}

template <class Real>
Var<Real> jepa_loss(const EmbeddingSeq<Real>& pred, const EmbeddingSeq<Real>& target) {
  return jepa_loss<Real>(std::span(&pred, 1), std::span(&target, 1));
}

std::vector<TokenPair> sample_pairs(const tok::MaskPartition& mask, std::size_t n_pairs, Rng& rng,
                                    bool allow_self) {
  const auto n = mask.masked.size();
  if (n < 2) {
    throw ShapeError("sample_pairs: need at least 2 masked tokens, got " + std::to_string(n));
  }
  std::vector<TokenPair> pairs(n_pairs);
  for (auto& p : pairs) {
    const auto a = rng.index(n);
    auto b = rng.index(n);
    while (!allow_self && b == a) b = rng.index(n);
    p = {mask.masked[a], mask.masked[b]};
  }
  return pairs;
}

std::array<double, 3> relative_offset(const tok::TokenIndex& m1, const tok::TokenIndex& m2,
                                      const tok::TokenGrid& grid) {
  if (!grid.contains(m1) || !grid.contains(m2)) {
    throw ShapeError("relative_offset: index outside grid (" + std::to_string(grid.t) + ", " +
                     std::to_string(grid.i) + ", " + std::to_string(grid.j) + ")");
  }
  auto d = [](std::size_t a, std::size_t b, std::size_t n) {
    return (static_cast<double>(a) - static_cast<double>(b)) / static_cast<double>(n);
  };
  return {d(m1.t, m2.t, grid.t), d(m1.i, m2.i, grid.i), d(m1.j, m2.j, grid.j)};
}

template <class Real>
Var<Real> pair_inputs(const EmbeddingSeq<Real>& seq, std::span<const TokenPair> pairs) {
  if (pairs.empty()) throw ShapeError("pair_inputs: empty pair set");
  std::size_t max_pos = 0;
  for (auto p : seq.positions) max_pos = std::max(max_pos, p);
  std::vector<std::ptrdiff_t> row_of(max_pos + 1, -1);
  for (std::size_t r = 0; r < seq.positions.size(); ++r) row_of[seq.positions[r]] = r;
  auto row = [&](std::size_t pos) {
    if (pos > max_pos || row_of[pos] < 0) {
      throw ShapeError("pair_inputs: token " + std::to_string(pos) + " has no embedding");
    }
    return static_cast<std::size_t>(row_of[pos]);
  };
  std::vector<std::size_t> r1(pairs.size()), r2(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    r1[k] = row(pairs[k].m1);
    r2[k] = row(pairs[k].m2);
  }
  const std::vector<Var<Real>> halves{diff::gather_rows(seq.embeddings, r1),
                                      diff::gather_rows(seq.embeddings, r2)};
  return diff::concat_cols<Real>(halves);
}

template <class Real>
Tensor<Real> pair_targets(std::span<const TokenPair> pairs, const tok::TokenGrid& grid) {
  Tensor<Real> out({pairs.size(), 3});
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto d = relative_offset(grid.unflat(pairs[k].m1), grid.unflat(pairs[k].m2), grid);
    for (std::size_t c = 0; c < 3; ++c) out.data[k * 3 + c] = static_cast<Real>(d[c]);
  }
  return out;
}

template <class Real>
Var<Real> localisation_loss(const nets::LocalisationMlp<Real>& mlp,
                            std::span<const Var<Real>> inputs,
                            std::span<const Tensor<Real>> targets) {
  if (inputs.size() != targets.size()) {
    throw ShapeError("localisation_loss: inputs and targets differ in batch size");
  }
  std::size_t total = 0;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    if (targets[b].shape != Shape{inputs[b].dim(0), 3}) {
      throw ShapeError("localisation_loss: item " + std::to_string(b) + ": targets " +
                       to_string(targets[b].shape) + " for " + std::to_string(inputs[b].dim(0)) +
                       " pairs");
    }
    total += inputs[b].dim(0);
  }
  if (total == 0) throw ShapeError("localisation_loss: empty pair set");
  Tensor<Real> all_targets({total, 3});
  std::size_t at = 0;
  for (const auto& t : targets) {
    std::copy(t.data.begin(), t.data.end(), all_targets.data.begin() + at);
    at += t.data.size();
  }
  const auto pred = mlp(diff::concat_rows<Real>(inputs));
  const auto err = diff::squared_l2_diff(pred, Var<Real>::leaf(std::move(all_targets)));
  return diff::scale(err, Real(1.0 / double(total)));
}

template <class Real>
Var<Real> combined_loss(const Var<Real>& jepa, const Var<Real>& local, double lambda) {
  check_lambda(lambda);
  return diff::add(diff::scale(jepa, Real(lambda)), diff::scale(local, Real(1.0 - lambda)));
}

double combined_loss(double jepa, double local, double lambda) {
  check_lambda(lambda);
  return lambda * jepa + (1.0 - lambda) * local;
}

template <class Real>
LossBreakdown PretrainLoss<Real>::breakdown() const {
  return {double(jepa.item()), double(local.item()), double(combined.item()), lambda};
}

template <class Real>
PretrainLoss<Real> pretrain_loss(const nets::PretrainModel<Real>& model,
                                 std::span<const PretrainItem> batch, double lambda) {
  check_lambda(lambda);
  if (batch.empty()) throw ShapeError("pretrain_loss: empty batch");
  std::vector<EmbeddingSeq<Real>> preds, targets;
  std::vector<Var<Real>> inputs;
  std::vector<Tensor<Real>> offsets;
  for (const auto& item : batch) {
    item.mask.validate(model.grid.count());
    const auto tokens = model.encoder->embed(item.clip);
    const auto context = nets::encode_context(*model.encoder, tokens, item.mask);
    preds.push_back(model.predictor->predict(context, item.mask.masked));
    {
      diff::NoGradGuard no_grad;
      const auto target_tokens = model.target_encoder->embed(item.clip);
      targets.push_back(nets::encode_target(*model.target_encoder, target_tokens, item.mask));
    }
    inputs.push_back(pair_inputs(preds.back(), item.pairs));
    offsets.push_back(pair_targets<Real>(item.pairs, model.grid));
  }
  PretrainLoss<Real> out;
  out.lambda = lambda;
  out.jepa = jepa_loss<Real>(preds, targets);
  out.local = localisation_loss<Real>(*model.loc, inputs, offsets);
  out.combined = combined_loss(out.jepa, out.local, lambda);
  return out;
}

#define LOCJEPA_INSTANTIATE_LOSSES(R)                                                        \
  template Var<R> jepa_loss(std::span<const EmbeddingSeq<R>>, std::span<const EmbeddingSeq<R>>); \
  template Var<R> jepa_loss(const EmbeddingSeq<R>&, const EmbeddingSeq<R>&);                 \
  template Var<R> pair_inputs(const EmbeddingSeq<R>&, std::span<const TokenPair>);           \
  template Tensor<R> pair_targets(std::span<const TokenPair>, const tok::TokenGrid&);        \
  template Var<R> localisation_loss(const nets::LocalisationMlp<R>&, std::span<const Var<R>>, \
                                    std::span<const Tensor<R>>);                             \
  template Var<R> combined_loss(const Var<R>&, const Var<R>&, double);                       \
  template struct PretrainLoss<R>;                                                           \
  template PretrainLoss<R> pretrain_loss(const nets::PretrainModel<R>&,                      \
                                         std::span<const PretrainItem>, double);

LOCJEPA_INSTANTIATE_LOSSES(float)
LOCJEPA_INSTANTIATE_LOSSES(double)

}  // namespace locjepa::losses
