#include "locjepa/diff/autograd.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "locjepa/common/error.hpp"

namespace locjepa::diff {
namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class Real>
Var<Real> Var<Real>::leaf(Tensor<Real> t, bool requires_grad) {
  auto node = std::make_shared<Node<Real>>();
  node->shape = std::move(t.shape);
  node->value = std::move(t.data);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

template <class Real>
Var<Real> Var<Real>::leaf(Shape shape, std::vector<Real> values, bool requires_grad) {
  return leaf(Tensor<Real>(std::move(shape), std::move(values)), requires_grad);
}

template <class Real>
Var<Real> Var<Real>::zeros(Shape shape, bool requires_grad) {
  return leaf(Tensor<Real>(std::move(shape)), requires_grad);
}

template <class Real>
Var<Real> Var<Real>::scalar(Real v) {
  return leaf(Shape{1}, std::vector<Real>{v}, false);
}

template <class Real>
Real Var<Real>::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item() on non-scalar of shape " + to_string(node_->shape));
  }
  return node_->value[0];
}

template <class Real>
void Var<Real>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

template <class Real>
std::vector<const Node<Real>*> tape_order(const Var<Real>& root) {
  // Iterative post-order DFS gives a topological order; reversing it yields
  // the backward visiting order.
  std::vector<const Node<Real>*> order;
  if (!root.defined() || !root.requires_grad()) return order;
  std::unordered_set<const Node<Real>*> seen;
  std::vector<std::pair<const Node<Real>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const Node<Real>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      if (node->backward) order.push_back(node);
      stack.pop_back();
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

template <class Real>
void backward(const Var<Real>& root) {
  if (!root.defined()) throw UsageError("backward on undefined variable");
  if (root.size() != 1) {
    throw ShapeError("backward requires a scalar root, got shape " + to_string(root.shape()));
  }
  if (!root.requires_grad()) return;
  const auto order = tape_order(root);
  for (const Node<Real>* n : order) {
    auto* node = const_cast<Node<Real>*>(n);
    node->grad.assign(node->value.size(), Real(0));
  }
  auto& root_grad = root.node()->grad_buffer();
  root_grad[0] += Real(1);
  for (const Node<Real>* n : order) {
    auto* node = const_cast<Node<Real>*>(n);
    node->backward(*node);
  }
}

template class Var<float>;
template class Var<double>;
template void backward<float>(const Var<float>&);
template void backward<double>(const Var<double>&);
template std::vector<const Node<float>*> tape_order<float>(const Var<float>&);
template std::vector<const Node<double>*> tape_order<double>(const Var<double>&);

}  // namespace locjepa::diff
