#include "locjepa/train/optim.hpp"

#include <cmath>

#include "locjepa/common/error.hpp"

namespace locjepa::train {

void AdamWConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("adamw: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw UsageError("adamw: eps must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("adamw: weight_decay must be >= 0");
}

template <class Real>
AdamW<Real>::AdamW(nets::ParamStore<Real>& store, AdamWConfig config)
    : store_(&store), config_(config) {
  config_.validate();
  for (const auto& e : store.entries()) {
    m_.emplace_back(e.var.shape());
    v_.emplace_back(e.var.shape());
  }
}

template <class Real>
void AdamW<Real>::step(double lr) {
  auto& entries = store_->entries();
  if (entries.size() != m_.size()) throw UsageError("adamw: parameter store changed size");
  for (const auto& e : entries) {
    if (!e.var.requires_grad() || !e.var.has_grad()) continue;
    for (const auto g : e.var.grad()) {
      if (!std::isfinite(double(g))) {
        throw NumericError("non-finite gradient in parameter '" + e.name + "'");
      }
    }
  }
  ++steps_;
  const auto& c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, double(steps_));
  const double bc2 = 1.0 - std::pow(c.beta2, double(steps_));
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto& e = entries[p];
    if (!e.var.requires_grad() || !e.var.has_grad()) continue;
    const auto g = e.var.grad();
    auto w = e.var.mutable_value();
    auto& m = m_[p].data;
    auto& v = v_[p].data;
    const double shrink = e.decay ? 1.0 - lr * c.weight_decay : 1.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = c.beta1 * double(m[k]) + (1.0 - c.beta1) * gk;
      const double vk = c.beta2 * double(v[k]) + (1.0 - c.beta2) * gk * gk;
      m[k] = static_cast<Real>(mk);
      v[k] = static_cast<Real>(vk);
      const double update = (mk / bc1) / (std::sqrt(vk / bc2) + c.eps);
      w[k] = static_cast<Real>(double(w[k]) * shrink - lr * update);
    }
  }
}

template <class Real>
void AdamW<Real>::export_state(nets::CheckpointFile& ckpt, const std::string& prefix) const {
  const auto& entries = store_->entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    ckpt.tensors.emplace_back(prefix + "m." + entries[p].name, m_[p]);
    ckpt.tensors.emplace_back(prefix + "v." + entries[p].name, v_[p]);
  }
}

template <class Real>
void AdamW<Real>::import_state(const nets::CheckpointFile& ckpt, const std::string& prefix,
                               std::size_t steps) {
  const auto& entries = store_->entries();
  std::string problems;
  auto load = [&](const std::string& name, Tensor<Real>& dst) {
    const auto* found = ckpt.find(name);
    const auto* t = found ? std::get_if<Tensor<Real>>(found) : nullptr;
    if (t == nullptr || t->shape != dst.shape) {
      problems += "\n  " + name;
      return;
    }
    dst = *t;
  };
  for (std::size_t p = 0; p < entries.size(); ++p) {
    load(prefix + "m." + entries[p].name, m_[p]);
    load(prefix + "v." + entries[p].name, v_[p]);
  }
  if (!problems.empty()) throw DataError("optimizer state missing or mismatched:" + problems);
  steps_ = steps;
}

template <class Real>
double clip_grad_norm(nets::ParamStore<Real>& store, double max_norm) {
  double sq = 0.0;
  for (const auto& e : store.entries()) {
    if (!e.var.requires_grad() || !e.var.has_grad()) continue;
    for (const auto g : e.var.grad()) sq += double(g) * double(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (auto& e : store.entries()) {
      if (!e.var.requires_grad() || !e.var.has_grad()) continue;
      for (auto& g : e.var.mutable_grad()) g = static_cast<Real>(double(g) * s);
    }
  }
  return norm;
}

template class AdamW<float>;
template class AdamW<double>;
template double clip_grad_norm(nets::ParamStore<float>&, double);
template double clip_grad_norm(nets::ParamStore<double>&, double);

}  // namespace locjepa::train
