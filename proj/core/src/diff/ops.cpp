#include "locjepa/diff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locjepa/common/error.hpp"

namespace locjepa::diff {
namespace {

template <class Real>
using MatMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class Real>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class Real>
using NodePtr = std::shared_ptr<Node<Real>>;

template <class Real>
Var<Real> make_result(const char* op, Shape shape, std::vector<Real> value,
                      std::vector<NodePtr<Real>> inputs,
                      std::function<void(Node<Real>&)> backward_fn) {
  auto node = std::make_shared<Node<Real>>();
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_fn);
  }
  return Var<Real>(std::move(node));
}

void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

template <class Real>
void check_rank2(const Var<Real>& a, const char* op) {
  check(a.shape().size() == 2,
        std::string(op) + ": expected a rank-2 input, got " + to_string(a.shape()));
}

template <class Real>
void check_same(const Var<Real>& a, const Var<Real>& b, const char* op) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                                    " vs " + to_string(b.shape()));
}

template <class Real>
Real gelu_value(Real x) {
  return Real(0.5) * x * (Real(1) + std::erf(x * Real(std::numbers::sqrt2 / 2)));
}

template <class Real>
Real gelu_grad(Real x) {
  const Real cdf = Real(0.5) * (Real(1) + std::erf(x * Real(std::numbers::sqrt2 / 2)));
  const Real pdf = std::exp(Real(-0.5) * x * x) * Real(0.5 * std::numbers::inv_sqrtpi *
                                                         std::numbers::sqrt2);
  return cdf + x * pdf;
}

}  // namespace

const std::set<std::string>& required_ops() {
  static const std::set<std::string> ops = {
      "matmul",      "add",        "sub",          "mul",          "scale",
      "add_row",     "mul_row",    "gelu",         "softmax",      "layer_norm",
      "sum",         "mean",       "l1_diff",      "squared_l2_diff", "concat_rows",
      "concat_cols", "gather_rows", "slice_cols",  "reshape",      "transpose",
      "conv_transpose2d", "cross_entropy", "detach"};
  return ops;
}

void require_op(std::string_view name) {
  if (!required_ops().contains(std::string(name))) {
    throw UsageError("unsupported differentiable op '" + std::string(name) + "'");
  }
}

template <class Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const auto n = a.dim(0), k = a.dim(1), m = b.dim(1);
  check(b.dim(0) == k, "matmul: inner dimensions differ " + to_string(a.shape()) + " x " +
                           to_string(b.shape()));
  std::vector<Real> out(n * m);
  MatMap<Real>(out.data(), n, m).noalias() =
      ConstMatMap<Real>(a.value().data(), n, k) * ConstMatMap<Real>(b.value().data(), k, m);
  return make_result<Real>("matmul", {n, m}, std::move(out), {a.node_ptr(), b.node_ptr()},
                           [n, k, m](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& B = *self.inputs[1];
                             ConstMatMap<Real> g(self.grad.data(), n, m);
                             if (A.requires_grad) {
                               MatMap<Real>(A.grad_buffer().data(), n, k).noalias() +=
                                   g * ConstMatMap<Real>(B.value.data(), k, m).transpose();
                             }
                             if (B.requires_grad) {
                               MatMap<Real>(B.grad_buffer().data(), k, m).noalias() +=
                                   ConstMatMap<Real>(A.value.data(), n, k).transpose() * g;
                             }
                           });
}

template <class Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  check_same(a, b, "add");
  std::vector<Real> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.value()[k] + b.value()[k];
  return make_result<Real>("add", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](Node<Real>& self) {
                             for (auto& in : self.inputs) {
                               if (!in->requires_grad) continue;
                               auto& g = in->grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k];
                             }
                           });
}

template <class Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  check_same(a, b, "sub");
  std::vector<Real> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.value()[k] - b.value()[k];
  return make_result<Real>("sub", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& B = *self.inputs[1];
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k];
                             }
                             if (B.requires_grad) {
                               auto& g = B.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k) g[k] -= self.grad[k];
                             }
                           });
}

template <class Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  check_same(a, b, "mul");
  std::vector<Real> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.value()[k] * b.value()[k];
  return make_result<Real>("mul", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                           [](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& B = *self.inputs[1];
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] += self.grad[k] * B.value[k];
                             }
                             if (B.requires_grad) {
                               auto& g = B.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] += self.grad[k] * A.value[k];
                             }
                           });
}

template <class Real>
Var<Real> scale(const Var<Real>& a, Real s) {
  std::vector<Real> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.value()[k] * s;
  return make_result<Real>("scale", a.shape(), std::move(out), {a.node_ptr()},
                           [s](Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k] * s;
                           });
}

template <class Real>
Var<Real> add_row(const Var<Real>& a, const Var<Real>& row) {
  check_rank2(a, "add_row");
  const auto n = a.dim(0), m = a.dim(1);
  check(row.size() == m, "add_row: row of size " + std::to_string(row.size()) +
                             " does not match width " + std::to_string(m));
  std::vector<Real> out(n * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = a.value()[r * m + c] + row.value()[c];
  return make_result<Real>("add_row", a.shape(), std::move(out), {a.node_ptr(), row.node_ptr()},
                           [n, m](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& R = *self.inputs[1];
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k];
                             }
                             if (R.requires_grad) {
                               auto& g = R.grad_buffer();
                               for (std::size_t r = 0; r < n; ++r)
                                 for (std::size_t c = 0; c < m; ++c) g[c] += self.grad[r * m + c];
                             }
                           });
}

template <class Real>
Var<Real> mul_row(const Var<Real>& a, const Var<Real>& row) {
  check_rank2(a, "mul_row");
  const auto n = a.dim(0), m = a.dim(1);
  check(row.size() == m, "mul_row: row of size " + std::to_string(row.size()) +
                             " does not match width " + std::to_string(m));
  std::vector<Real> out(n * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = a.value()[r * m + c] * row.value()[c];
  return make_result<Real>("mul_row", a.shape(), std::move(out), {a.node_ptr(), row.node_ptr()},
                           [n, m](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& R = *self.inputs[1];
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t r = 0; r < n; ++r)
                                 for (std::size_t c = 0; c < m; ++c)
                                   g[r * m + c] += self.grad[r * m + c] * R.value[c];
                             }
                             if (R.requires_grad) {
                               auto& g = R.grad_buffer();
                               for (std::size_t r = 0; r < n; ++r)
                                 for (std::size_t c = 0; c < m; ++c)
                                   g[c] += self.grad[r * m + c] * A.value[r * m + c];
                             }
                           });
}

template <class Real>
Var<Real> gelu(const Var<Real>& a) {
  std::vector<Real> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = gelu_value(a.value()[k]);
  return make_result<Real>("gelu", a.shape(), std::move(out), {a.node_ptr()},
                           [](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& g = A.grad_buffer();
                             for (std::size_t k = 0; k < g.size(); ++k)
                               g[k] += self.grad[k] * gelu_grad(A.value[k]);
                           });
}

template <class Real>
Var<Real> softmax(const Var<Real>& a) {
  check(!a.shape().empty(), "softmax: scalar input");
  const auto m = a.shape().back();
  const auto n = m ? a.size() / m : 0;
  std::vector<Real> out(a.size());
  for (std::size_t r = 0; r < n; ++r) {
    const Real* x = a.value().data() + r * m;
    Real* y = out.data() + r * m;
    const Real mx = *std::max_element(x, x + m);
    Real z = 0;
    for (std::size_t c = 0; c < m; ++c) z += (y[c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < m; ++c) y[c] /= z;
  }
  return make_result<Real>("softmax", a.shape(), std::move(out), {a.node_ptr()},
                           [n, m](Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (std::size_t r = 0; r < n; ++r) {
                               const Real* y = self.value.data() + r * m;
                               const Real* gy = self.grad.data() + r * m;
                               Real dot = 0;
                               for (std::size_t c = 0; c < m; ++c) dot += gy[c] * y[c];
                               for (std::size_t c = 0; c < m; ++c)
                                 g[r * m + c] += y[c] * (gy[c] - dot);
                             }
                           });
}

template <class Real>
Var<Real> layer_norm(const Var<Real>& a, Real eps) {
  check(!a.shape().empty(), "layer_norm: scalar input");
  const auto m = a.shape().back();
  check(m > 0, "layer_norm: empty feature axis");
  const auto n = a.size() / m;
  std::vector<Real> out(a.size());
  std::vector<Real> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Real* x = a.value().data() + r * m;
    Real mu = 0;
    for (std::size_t c = 0; c < m; ++c) mu += x[c];
    mu /= Real(m);
    Real var = 0;
    for (std::size_t c = 0; c < m; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= Real(m);
    inv_std[r] = Real(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = (x[c] - mu) * inv_std[r];
  }
  return make_result<Real>(
      "layer_norm", a.shape(), std::move(out), {a.node_ptr()},
      [n, m, inv_std = std::move(inv_std)](Node<Real>& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t r = 0; r < n; ++r) {
          const Real* y = self.value.data() + r * m;
          const Real* gy = self.grad.data() + r * m;
          Real mean_g = 0, mean_gy = 0;
          for (std::size_t c = 0; c < m; ++c) {
            mean_g += gy[c];
            mean_gy += gy[c] * y[c];
          }
          mean_g /= Real(m);
          mean_gy /= Real(m);
          for (std::size_t c = 0; c < m; ++c)
            g[r * m + c] += inv_std[r] * (gy[c] - mean_g - y[c] * mean_gy);
        }
      });
}

template <class Real>
Var<Real> sum(const Var<Real>& a) {
  Real s = 0;
  for (auto v : a.value()) s += v;
  return make_result<Real>("sum", {1}, {s}, {a.node_ptr()}, [](Node<Real>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <class Real>
Var<Real> mean(const Var<Real>& a) {
  check(a.size() > 0, "mean: empty input");
  Real s = 0;
  for (auto v : a.value()) s += v;
  const Real inv = Real(1) / Real(a.size());
  return make_result<Real>("mean", {1}, {s * inv}, {a.node_ptr()}, [inv](Node<Real>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

template <class Real>
Var<Real> l1_diff(const Var<Real>& a, const Var<Real>& b) {
  check_same(a, b, "l1_diff");
  Real s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a.value()[k] - b.value()[k]);
  return make_result<Real>("l1_diff", {1}, {s}, {a.node_ptr(), b.node_ptr()},
                           [](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& B = *self.inputs[1];
                             const Real g0 = self.grad[0];
                             auto sign = [](Real d) {
                               return d > 0 ? Real(1) : (d < 0 ? Real(-1) : Real(0));
                             };
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] += g0 * sign(A.value[k] - B.value[k]);
                             }
                             if (B.requires_grad) {
                               auto& g = B.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] -= g0 * sign(A.value[k] - B.value[k]);
                             }
                           });
}

template <class Real>
Var<Real> squared_l2_diff(const Var<Real>& a, const Var<Real>& b) {
  check_same(a, b, "squared_l2_diff");
  Real s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Real d = a.value()[k] - b.value()[k];
    s += d * d;
  }
  return make_result<Real>("squared_l2_diff", {1}, {s}, {a.node_ptr(), b.node_ptr()},
                           [](Node<Real>& self) {
                             auto& A = *self.inputs[0];
                             auto& B = *self.inputs[1];
                             const Real g0 = Real(2) * self.grad[0];
                             if (A.requires_grad) {
                               auto& g = A.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] += g0 * (A.value[k] - B.value[k]);
                             }
                             if (B.requires_grad) {
                               auto& g = B.grad_buffer();
                               for (std::size_t k = 0; k < g.size(); ++k)
                                 g[k] -= g0 * (A.value[k] - B.value[k]);
                             }
                           });
}

template <class Real>
Var<Real> concat_rows(std::span<const Var<Real>> parts) {
  check(!parts.empty(), "concat_rows: no inputs");
  const auto m = parts[0].shape().size() == 2 ? parts[0].dim(1) : 0;
  std::size_t rows = 0;
  std::vector<NodePtr<Real>> inputs;
  for (const auto& p : parts) {
    check_rank2(p, "concat_rows");
    check(p.dim(1) == m, "concat_rows: width mismatch " + to_string(p.shape()));
    rows += p.dim(0);
    inputs.push_back(p.node_ptr());
  }
  std::vector<Real> out;
  out.reserve(rows * m);
  for (const auto& p : parts) out.insert(out.end(), p.value().begin(), p.value().end());
  return make_result<Real>("concat_rows", {rows, m}, std::move(out), std::move(inputs),
                           [](Node<Real>& self) {
                             std::size_t offset = 0;
                             for (auto& in : self.inputs) {
                               const auto len = in->value.size();
                               if (in->requires_grad) {
                                 auto& g = in->grad_buffer();
                                 for (std::size_t k = 0; k < len; ++k) g[k] += self.grad[offset + k];
                               }
                               offset += len;
                             }
                           });
}

template <class Real>
Var<Real> concat_cols(std::span<const Var<Real>> parts) {
  check(!parts.empty(), "concat_cols: no inputs");
  check_rank2(parts[0], "concat_cols");
  const auto n = parts[0].dim(0);
  std::size_t cols = 0;
  std::vector<NodePtr<Real>> inputs;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    check_rank2(p, "concat_cols");
    check(p.dim(0) == n, "concat_cols: row count mismatch " + to_string(p.shape()));
    cols += p.dim(1);
    widths.push_back(p.dim(1));
    inputs.push_back(p.node_ptr());
  }
  std::vector<Real> out(n * cols);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    const auto w = p.dim(1);
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(p.value().data() + r * w, w, out.data() + r * cols + c0);
    c0 += w;
  }
  return make_result<Real>("concat_cols", {n, cols}, std::move(out), std::move(inputs),
                           [n, cols, widths = std::move(widths)](Node<Real>& self) {
                             std::size_t c0 = 0;
                             for (std::size_t p = 0; p < self.inputs.size(); ++p) {
                               const auto w = widths[p];
                               auto& in = *self.inputs[p];
                               if (in.requires_grad) {
                                 auto& g = in.grad_buffer();
                                 for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t c = 0; c < w; ++c)
                                     g[r * w + c] += self.grad[r * cols + c0 + c];
                               }
                               c0 += w;
                             }
                           });
}

template <class Real>
Var<Real> gather_rows(const Var<Real>& a, std::span<const std::size_t> rows) {
  check_rank2(a, "gather_rows");
  const auto n = a.dim(0), m = a.dim(1);
  std::vector<Real> out(rows.size() * m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    check(rows[r] < n, "gather_rows: index " + std::to_string(rows[r]) + " out of range " +
                           std::to_string(n));
    std::copy_n(a.value().data() + rows[r] * m, m, out.data() + r * m);
  }
  return make_result<Real>("gather_rows", {rows.size(), m}, std::move(out), {a.node_ptr()},
                           [m, idx = std::vector<std::size_t>(rows.begin(), rows.end())](
                               Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (std::size_t r = 0; r < idx.size(); ++r)
                               for (std::size_t c = 0; c < m; ++c)
                                 g[idx[r] * m + c] += self.grad[r * m + c];
                           });
}

template <class Real>
Var<Real> slice_cols(const Var<Real>& a, std::size_t begin, std::size_t end) {
  check_rank2(a, "slice_cols");
  const auto n = a.dim(0), m = a.dim(1);
  check(begin <= end && end <= m, "slice_cols: bad range for width " + std::to_string(m));
  const auto w = end - begin;
  std::vector<Real> out(n * w);
  for (std::size_t r = 0; r < n; ++r)
    std::copy_n(a.value().data() + r * m + begin, w, out.data() + r * w);
  return make_result<Real>("slice_cols", {n, w}, std::move(out), {a.node_ptr()},
                           [n, m, w, begin](Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t c = 0; c < w; ++c)
                                 g[r * m + begin + c] += self.grad[r * w + c];
                           });
}

template <class Real>
Var<Real> reshape(const Var<Real>& a, Shape shape) {
  check(numel(shape) == a.size(),
        "reshape: " + to_string(a.shape()) + " cannot become " + to_string(shape));
  std::vector<Real> out(a.value().begin(), a.value().end());
  return make_result<Real>("reshape", std::move(shape), std::move(out), {a.node_ptr()},
                           [](Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k];
                           });
}

template <class Real>
Var<Real> transpose(const Var<Real>& a) {
  check_rank2(a, "transpose");
  const auto n = a.dim(0), m = a.dim(1);
  std::vector<Real> out(n * m);
  MatMap<Real>(out.data(), m, n) = ConstMatMap<Real>(a.value().data(), n, m).transpose();
  return make_result<Real>("transpose", {m, n}, std::move(out), {a.node_ptr()},
                           [n, m](Node<Real>& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             MatMap<Real>(g.data(), n, m) +=
                                 ConstMatMap<Real>(self.grad.data(), m, n).transpose();
                           });
}

template <class Real>
Var<Real> conv_transpose2d(const Var<Real>& x, const Var<Real>& w, const Var<Real>& bias,
                           std::size_t stride) {
  check(x.shape().size() == 3, "conv_transpose2d: input must be [Cin, H, W], got " +
                                   to_string(x.shape()));
  check(w.shape().size() == 4 && w.dim(2) == w.dim(3),
        "conv_transpose2d: weight must be [Cin, Cout, k, k], got " + to_string(w.shape()));
  check(stride > 0, "conv_transpose2d: stride must be positive");
  const auto cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const auto cout = w.dim(1), k = w.dim(2);
  check(w.dim(0) == cin, "conv_transpose2d: channel mismatch " + to_string(x.shape()) + " vs " +
                             to_string(w.shape()));
  check(bias.size() == cout, "conv_transpose2d: bias size mismatch");
  const auto oh = (h - 1) * stride + k, ow = (wd - 1) * stride + k;
  std::vector<Real> out(cout * oh * ow);
  const Real* X = x.value().data();
  const Real* Wt = w.value().data();
  for (std::size_t co = 0; co < cout; ++co)
    std::fill_n(out.data() + co * oh * ow, oh * ow, bias.value()[co]);
  for (std::size_t ci = 0; ci < cin; ++ci)
    for (std::size_t co = 0; co < cout; ++co) {
      const Real* ker = Wt + (ci * cout + co) * k * k;
      Real* o = out.data() + co * oh * ow;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < wd; ++xx) {
          const Real v = X[(ci * h + y) * wd + xx];
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              o[(y * stride + ky) * ow + xx * stride + kx] += v * ker[ky * k + kx];
        }
    }
  return make_result<Real>(
      "conv_transpose2d", {cout, oh, ow}, std::move(out),
      {x.node_ptr(), w.node_ptr(), bias.node_ptr()},
      [cin, h, wd, cout, k, oh, ow, stride](Node<Real>& self) {
        auto& X = *self.inputs[0];
        auto& Wn = *self.inputs[1];
        auto& B = *self.inputs[2];
        const Real* G = self.grad.data();
        if (B.requires_grad) {
          auto& gb = B.grad_buffer();
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t p = 0; p < oh * ow; ++p) gb[co] += G[co * oh * ow + p];
        }
        Real* gx = X.requires_grad ? X.grad_buffer().data() : nullptr;
        Real* gw = Wn.requires_grad ? Wn.grad_buffer().data() : nullptr;
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t co = 0; co < cout; ++co) {
            const Real* ker = Wn.value.data() + (ci * cout + co) * k * k;
            const Real* go = G + co * oh * ow;
            for (std::size_t y = 0; y < h; ++y)
              for (std::size_t xx = 0; xx < wd; ++xx) {
                const Real v = X.value[(ci * h + y) * wd + xx];
                Real acc = 0;
                for (std::size_t ky = 0; ky < k; ++ky)
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    const Real gval = go[(y * stride + ky) * ow + xx * stride + kx];
                    acc += gval * ker[ky * k + kx];
                    if (gw) gw[(ci * cout + co) * k * k + ky * k + kx] += gval * v;
                  }
                if (gx) gx[(ci * h + y) * wd + xx] += acc;
              }
          }
      });
}

template <class Real>
Var<Real> cross_entropy(const Var<Real>& logits, std::span<const std::int32_t> labels) {
  check_rank2(logits, "cross_entropy");
  const auto n = logits.dim(0), c = logits.dim(1);
  check(labels.size() == n, "cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " rows");
  check(n > 0, "cross_entropy: empty batch");
  std::vector<Real> probs(n * c);
  Real loss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto y = labels[r];
    check(y >= 0 && static_cast<std::size_t>(y) < c,
          "cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    const Real* x = logits.value().data() + r * c;
    const Real mx = *std::max_element(x, x + c);
    Real z = 0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[r * c + j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[r * c + j] /= z;
    loss += -(x[y] - mx - std::log(z));
  }
  loss /= Real(n);
  return make_result<Real>(
      "cross_entropy", {1}, {loss}, {logits.node_ptr()},
      [n, c, probs = std::move(probs),
       lab = std::vector<std::int32_t>(labels.begin(), labels.end())](Node<Real>& self) {
        auto& g = self.inputs[0]->grad_buffer();
        const Real s = self.grad[0] / Real(n);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < c; ++j) {
            const Real onehot = static_cast<std::size_t>(lab[r]) == j ? Real(1) : Real(0);
            g[r * c + j] += s * (probs[r * c + j] - onehot);
          }
      });
}

template <class Real>
Var<Real> detach(const Var<Real>& a) {
  return Var<Real>::leaf(a.shape(), std::vector<Real>(a.value().begin(), a.value().end()), false);
}

#define LOCJEPA_INSTANTIATE_OPS(R)                                                          \
  template Var<R> matmul(const Var<R>&, const Var<R>&);                                     \
  template Var<R> add(const Var<R>&, const Var<R>&);                                        \
  template Var<R> sub(const Var<R>&, const Var<R>&);                                        \
  template Var<R> mul(const Var<R>&, const Var<R>&);                                        \
  template Var<R> scale(const Var<R>&, R);                                                  \
  template Var<R> add_row(const Var<R>&, const Var<R>&);                                    \
  template Var<R> mul_row(const Var<R>&, const Var<R>&);                                    \
  template Var<R> gelu(const Var<R>&);                                                      \
  template Var<R> softmax(const Var<R>&);                                                   \
  template Var<R> layer_norm(const Var<R>&, R);                                             \
  template Var<R> sum(const Var<R>&);                                                       \
  template Var<R> mean(const Var<R>&);                                                      \
  template Var<R> l1_diff(const Var<R>&, const Var<R>&);                                    \
  template Var<R> squared_l2_diff(const Var<R>&, const Var<R>&);                            \
  template Var<R> concat_rows(std::span<const Var<R>>);                                     \
  template Var<R> concat_cols(std::span<const Var<R>>);                                     \
  template Var<R> gather_rows(const Var<R>&, std::span<const std::size_t>);                 \
  template Var<R> slice_cols(const Var<R>&, std::size_t, std::size_t);                      \
  template Var<R> reshape(const Var<R>&, Shape);                                            \
  template Var<R> transpose(const Var<R>&);                                                 \
  template Var<R> conv_transpose2d(const Var<R>&, const Var<R>&, const Var<R>&, std::size_t); \
  template Var<R> cross_entropy(const Var<R>&, std::span<const std::int32_t>);              \
  template Var<R> detach(const Var<R>&);

LOCJEPA_INSTANTIATE_OPS(float)
LOCJEPA_INSTANTIATE_OPS(double)

}  // namespace locjepa::diff
