#include "locjepa/nets/layers.hpp"

#include <cmath>

#include "locjepa/common/error.hpp"
#include "locjepa/diff/ops.hpp"

namespace locjepa::nets {

constexpr double kInitStd = 0.02;

template <class Real>
Linear<Real> Linear<Real>::create(ParamStore<Real>& store, const std::string& name,
                                  std::size_t in, std::size_t out, Rng& rng, LinearInit kind) {
  Linear l;
  l.weight = store.add(name + ".weight",
                       kind == LinearInit::trunc_normal
                           ? init::trunc_normal<Real>({in, out}, kInitStd, rng)
                           : init::uniform<Real>({in, out}, 1.0 / std::sqrt(double(in)), rng));
  l.bias = store.add(name + ".bias", init::zeros<Real>({out}));
  return l;
}

template <class Real>
Var<Real> Linear<Real>::operator()(const Var<Real>& x) const {
  return diff::add_row(diff::matmul(x, weight), bias);
}

template <class Real>
LayerNorm<Real> LayerNorm<Real>::create(ParamStore<Real>& store, const std::string& name,
                                        std::size_t dim) {
  return {store.add(name + ".gain", init::ones<Real>({dim})),
          store.add(name + ".bias", init::zeros<Real>({dim}))};
}

template <class Real>
Var<Real> LayerNorm<Real>::operator()(const Var<Real>& x) const {
  return diff::add_row(diff::mul_row(diff::layer_norm(x), gain), bias);
}

template <class Real>
Var<Real> multi_head_attention(const Var<Real>& q, const Var<Real>& k, const Var<Real>& v,
                               std::size_t heads) {
  const std::size_t d = q.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (k.dim(1) != d || v.dim(1) != d || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: q/k/v shapes disagree");
  }
  const std::size_t hd = d / heads;
  const Real scale = Real(1) / std::sqrt(Real(hd));
  std::vector<Var<Real>> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = heads == 1 ? q : diff::slice_cols(q, h * hd, (h + 1) * hd);
    const auto kh = heads == 1 ? k : diff::slice_cols(k, h * hd, (h + 1) * hd);
    const auto vh = heads == 1 ? v : diff::slice_cols(v, h * hd, (h + 1) * hd);
    const auto scores = diff::scale(diff::matmul(qh, diff::transpose(kh)), scale);
    outs.push_back(diff::matmul(diff::softmax(scores), vh));
  }
  return heads == 1 ? outs[0] : diff::concat_cols<Real>(outs);
}

template <class Real>
SelfAttention<Real> SelfAttention<Real>::create(ParamStore<Real>& store, const std::string& name,
                                                std::size_t dim, std::size_t heads, Rng& rng) {
  return {Linear<Real>::create(store, name + ".qkv", dim, 3 * dim, rng),
          Linear<Real>::create(store, name + ".proj", dim, dim, rng), heads};
}

template <class Real>
Var<Real> SelfAttention<Real>::operator()(const Var<Real>& x) const {
  const std::size_t d = proj.in();
  const auto qkv_out = qkv(x);
  const auto q = diff::slice_cols(qkv_out, 0, d);
  const auto k = diff::slice_cols(qkv_out, d, 2 * d);
  const auto v = diff::slice_cols(qkv_out, 2 * d, 3 * d);
  return proj(multi_head_attention(q, k, v, heads));
}

template <class Real>
CrossAttention<Real> CrossAttention<Real>::create(ParamStore<Real>& store, const std::string& name,
                                                  std::size_t dim, std::size_t heads, Rng& rng) {
  return {Linear<Real>::create(store, name + ".q", dim, dim, rng),
          Linear<Real>::create(store, name + ".kv", dim, 2 * dim, rng),
          Linear<Real>::create(store, name + ".proj", dim, dim, rng), heads};
}

template <class Real>
Var<Real> CrossAttention<Real>::operator()(const Var<Real>& queries,
                                           const Var<Real>& context) const {
  const std::size_t d = proj.in();
  const auto kv_out = kv(context);
  return proj(multi_head_attention(q(queries), diff::slice_cols(kv_out, 0, d),
                                   diff::slice_cols(kv_out, d, 2 * d), heads));
}

template <class Real>
Mlp<Real> Mlp<Real>::create(ParamStore<Real>& store, const std::string& name, std::size_t dim,
                            std::size_t hidden, Rng& rng) {
  return {Linear<Real>::create(store, name + ".fc1", dim, hidden, rng),
          Linear<Real>::create(store, name + ".fc2", hidden, dim, rng)};
}

template <class Real>
Var<Real> Mlp<Real>::operator()(const Var<Real>& x) const {
  return fc2(diff::gelu(fc1(x)));
}

template <class Real>
TransformerBlock<Real> TransformerBlock<Real>::create(ParamStore<Real>& store,
                                                      const std::string& name, std::size_t dim,
                                                      std::size_t heads, double mlp_ratio,
                                                      Rng& rng) {
  const auto hidden = static_cast<std::size_t>(std::llround(double(dim) * mlp_ratio));
  TransformerBlock b;
  b.norm1 = LayerNorm<Real>::create(store, name + ".norm1", dim);
  b.attn = SelfAttention<Real>::create(store, name + ".attn", dim, heads, rng);
  b.norm2 = LayerNorm<Real>::create(store, name + ".norm2", dim);
  b.mlp = Mlp<Real>::create(store, name + ".mlp", dim, hidden, rng);
  return b;
}

template <class Real>
Var<Real> TransformerBlock<Real>::operator()(const Var<Real>& x) const {
  const auto h = diff::add(x, attn(norm1(x)));
  return diff::add(h, mlp(norm2(h)));
}

#define LOCJEPA_INSTANTIATE_LAYERS(R)                                               \
  template struct Linear<R>;                                                        \
  template struct LayerNorm<R>;                                                     \
  template struct SelfAttention<R>;                                                 \
  template struct CrossAttention<R>;                                                \
  template struct Mlp<R>;                                                           \
  template struct TransformerBlock<R>;                                              \
  template Var<R> multi_head_attention(const Var<R>&, const Var<R>&, const Var<R>&, \
                                       std::size_t);

LOCJEPA_INSTANTIATE_LAYERS(float)
LOCJEPA_INSTANTIATE_LAYERS(double)

}  // namespace locjepa::nets
