#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "locjepa/diff/autograd.hpp"
#include "locjepa/nets/params.hpp"

namespace locjepa::nets {

template <class Real>
using Var = diff::Var<Real>;

enum class LinearInit { trunc_normal, fan_in_uniform };

template <class Real>
struct Linear {
  Var<Real> weight;  // [in, out]
  Var<Real> bias;    // [out]

  static Linear create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng, LinearInit kind = LinearInit::trunc_normal);
  Var<Real> operator()(const Var<Real>& x) const;
  std::size_t in() const { return weight.dim(0); }
  std::size_t out() const { return weight.dim(1); }
};

template <class Real>
struct LayerNorm {
  Var<Real> gain;
  Var<Real> bias;

  static LayerNorm create(ParamStore<Real>& store, const std::string& name, std::size_t dim);
  Var<Real> operator()(const Var<Real>& x) const;
};

/// Scaled dot-product attention split over `heads` column groups.
/// q [n, d], k [m, d], v [m, d] -> [n, d].
template <class Real>
Var<Real> multi_head_attention(const Var<Real>& q, const Var<Real>& k, const Var<Real>& v,
                               std::size_t heads);

template <class Real>
struct SelfAttention {
  Linear<Real> qkv;
  Linear<Real> proj;
  std::size_t heads = 1;

  static SelfAttention create(ParamStore<Real>& store, const std::string& name, std::size_t dim,
                              std::size_t heads, Rng& rng);
  Var<Real> operator()(const Var<Real>& x) const;
};

template <class Real>
struct CrossAttention {
  Linear<Real> q;
  Linear<Real> kv;
  Linear<Real> proj;
  std::size_t heads = 1;

  static CrossAttention create(ParamStore<Real>& store, const std::string& name, std::size_t dim,
                               std::size_t heads, Rng& rng);
  Var<Real> operator()(const Var<Real>& queries, const Var<Real>& context) const;
};

template <class Real>
struct Mlp {
  Linear<Real> fc1;
  Linear<Real> fc2;

  static Mlp create(ParamStore<Real>& store, const std::string& name, std::size_t dim,
                    std::size_t hidden, Rng& rng);
  Var<Real> operator()(const Var<Real>& x) const;
};

/// Pre-norm transformer block.
template <class Real>
struct TransformerBlock {
  LayerNorm<Real> norm1;
  SelfAttention<Real> attn;
  LayerNorm<Real> norm2;
  Mlp<Real> mlp;

  static TransformerBlock create(ParamStore<Real>& store, const std::string& name,
                                 std::size_t dim, std::size_t heads, double mlp_ratio, Rng& rng);
  Var<Real> operator()(const Var<Real>& x) const;
};

}  // namespace locjepa::nets
