#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "locjepa/common/rng.hpp"
#include "locjepa/diff/autograd.hpp"

namespace locjepa::nets {

/// Ordered, named parameter leaves. Modules keep handles to the same nodes,
/// so values updated in place here are what the next forward pass sees.
template <class Real>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    diff::Var<Real> var;
    bool decay;  // weight decay applies (matrices only)
  };

  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  diff::Var<Real> add(std::string name, Tensor<Real> init);
  diff::Var<Real> get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Enables or disables gradients for every entry whose name starts with prefix.
  void set_trainable(std::string_view prefix, bool trainable);
  /// Copies values by name; every entry here must exist in `other` with the
  /// same shape.
  void copy_values_from(const ParamStore& other);

 private:
  std::vector<Entry> entries_;
};

namespace init {
template <class Real> Tensor<Real> zeros(Shape shape);
template <class Real> Tensor<Real> ones(Shape shape);
template <class Real> Tensor<Real> trunc_normal(Shape shape, double std, Rng& rng);
template <class Real> Tensor<Real> uniform(Shape shape, double bound, Rng& rng);
}  // namespace init

}  // namespace locjepa::nets
