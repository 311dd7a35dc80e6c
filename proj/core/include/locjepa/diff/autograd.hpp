#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "locjepa/diff/tensor.hpp"

namespace locjepa::diff {

template <class Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until backward touches the node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs that require grad.
  std::function<void(Node&)> backward;

  std::vector<Real>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
    return grad;
  }
};

/// Handle to a node in the dynamic graph. Copies share the node.
template <class Real>
class Var {
 public:
  using value_type = Real;

  Var() = default;
  explicit Var(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  static Var leaf(Tensor<Real> t, bool requires_grad = false);
  static Var leaf(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Var zeros(Shape shape, bool requires_grad = false);
  static Var scalar(Real v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  std::span<const Real> value() const { return node_->value; }
  /// In-place access for optimizer/EMA updates outside any tape.
  std::span<Real> mutable_value() { return node_->value; }
  Real item() const;

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  /// Gradient, or an empty span when backward never reached this node.
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  Tensor<Real> to_tensor() const { return Tensor<Real>(node_->shape, node_->value); }

  Node<Real>* node() const { return node_.get(); }
  const std::shared_ptr<Node<Real>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

/// Reverse pass from a scalar root. Each recorded op reachable from the root
/// runs exactly once, in reverse topological order. Leaf gradients
/// accumulate across calls; intermediate gradients are rebuilt every call.
template <class Real>
void backward(const Var<Real>& root);

/// Reachable recorded ops in the order backward would visit them.
template <class Real>
std::vector<const Node<Real>*> tape_order(const Var<Real>& root);

/// While alive, newly built ops record no inputs and require no grad.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace locjepa::diff
