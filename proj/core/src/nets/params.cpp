#include "locjepa/nets/params.hpp"

#include <algorithm>

#include "locjepa/common/error.hpp"

namespace locjepa::nets {

template <class Real>
diff::Var<Real> ParamStore<Real>::add(std::string name, Tensor<Real> init) {
  if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  const bool decay = init.ndim() >= 2;
  auto var = diff::Var<Real>::leaf(std::move(init), true);
  entries_.push_back({std::move(name), var, decay});
  return var;
}

template <class Real>
diff::Var<Real> ParamStore<Real>::get(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.var;
  throw UsageError("unknown parameter '" + std::string(name) + "'");
}

template <class Real>
bool ParamStore<Real>::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

template <class Real>
std::size_t ParamStore<Real>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.size();
  return n;
}

template <class Real>
void ParamStore<Real>::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

template <class Real>
void ParamStore<Real>::set_trainable(std::string_view prefix, bool trainable) {
  for (auto& e : entries_)
    if (e.name.starts_with(prefix)) e.var.set_requires_grad(trainable);
}

template <class Real>
void ParamStore<Real>::copy_values_from(const ParamStore& other) {
  for (auto& e : entries_) {
    const auto src = other.get(e.name);
    if (src.shape() != e.var.shape()) {
      throw ShapeError("parameter '" + e.name + "': shape " + to_string(e.var.shape()) +
                       " vs " + to_string(src.shape()));
    }
    std::copy(src.value().begin(), src.value().end(), e.var.mutable_value().begin());
  }
}

namespace init {

template <class Real>
Tensor<Real> zeros(Shape shape) {
  return Tensor<Real>(std::move(shape));
}

template <class Real>
Tensor<Real> ones(Shape shape) {
  Tensor<Real> t(std::move(shape));
  std::fill(t.data.begin(), t.data.end(), Real(1));
  return t;
}

template <class Real>
Tensor<Real> trunc_normal(Shape shape, double std, Rng& rng) {
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<Real>(rng.trunc_normal(std));
  return t;
}

template <class Real>
Tensor<Real> uniform(Shape shape, double bound, Rng& rng) {
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<Real>(rng.uniform(-bound, bound));
  return t;
}

template Tensor<float> zeros<float>(Shape);
template Tensor<double> zeros<double>(Shape);
template Tensor<float> ones<float>(Shape);
template Tensor<double> ones<double>(Shape);
template Tensor<float> trunc_normal<float>(Shape, double, Rng&);
template Tensor<double> trunc_normal<double>(Shape, double, Rng&);
template Tensor<float> uniform<float>(Shape, double, Rng&);
template Tensor<double> uniform<double>(Shape, double, Rng&);

}  // namespace init

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace locjepa::nets
