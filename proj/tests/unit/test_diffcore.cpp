#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "locjepa/common/error.hpp"
#include "locjepa/common/rng.hpp"
#include "locjepa/diff/autograd.hpp"
#include "locjepa/diff/grad_check.hpp"
#include "locjepa/diff/ops.hpp"

using namespace locjepa;
using namespace locjepa::diff;
using V = Var<double>;

namespace {

V param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return V::leaf(std::move(shape), std::move(v), true);
}

Tensor<double> rand_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.data) x = rng.uniform(-1.0, 1.0);
  return t;
}

void expect_check(const std::function<V(const V&)>& f, const Tensor<double>& x) {
  const auto r = grad_check(f, x, 1e-6, 1e-6);
  EXPECT_TRUE(r.pass) << "max_rel_err " << r.max_rel_err << " at " << r.worst_index;
}

}  // namespace

TEST(Autograd, SumGivesOnes) {
  auto x = V::leaf({4}, {1, -2, 3, 0.5}, true);
  backward(sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Autograd, L1OfSelfHasZeroLossAndGrad) {
  auto x = V::leaf({3}, {1, -2, 3}, true);
  auto loss = l1_diff(x, x);
  EXPECT_EQ(loss.item(), 0.0);
  backward(loss);
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Autograd, CrossEntropyGradientAtEqualLogits) {
  auto logits = V::leaf({1, 2}, {0.0, 0.0}, true);
  const std::int32_t label = 0;
  auto loss = cross_entropy(logits, std::span<const std::int32_t>(&label, 1));
  EXPECT_NEAR(loss.item(), std::log(2.0), 1e-15);
  backward(loss);
  EXPECT_NEAR(logits.grad()[0], -0.5, 1e-15);
  EXPECT_NEAR(logits.grad()[1], 0.5, 1e-15);
}

TEST(Autograd, EachTapeNodeRunsOnceInReverseOrder) {
  auto x = V::leaf({2}, {1.0, 2.0}, true);
  auto y = mul(x, x);     // shared input used twice
  auto z = add(y, y);
  auto root = sum(z);
  const auto order = tape_order(root);
  std::set<const Node<double>*> seen(order.begin(), order.end());
  EXPECT_EQ(seen.size(), order.size());
  EXPECT_EQ(order.front(), root.node());
  backward(root);
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);  // d/dx 2x^2
  EXPECT_DOUBLE_EQ(x.grad()[1], 8.0);
}

TEST(Autograd, LeavesReachableFromRootGetGradients) {
  Rng rng(1);
  auto a = param({2, 3}, rng);
  auto b = param({3, 2}, rng);
  auto unused = param({2}, rng);
  backward(sum(matmul(a, b)));
  EXPECT_TRUE(a.has_grad());
  EXPECT_TRUE(b.has_grad());
  EXPECT_FALSE(unused.has_grad());
}

TEST(Autograd, DetachBlocksGradient) {
  auto x = V::leaf({2}, {1.0, 2.0}, true);
  auto y = V::leaf({2}, {3.0, 4.0}, true);
  backward(sum(mul(detach(x), y)));
  EXPECT_FALSE(x.has_grad() && (x.grad()[0] != 0 || x.grad()[1] != 0));
  EXPECT_DOUBLE_EQ(y.grad()[0], 1.0);
}

TEST(Autograd, NoGradGuardRecordsNothing) {
  auto x = V::leaf({2}, {1.0, 2.0}, true);
  V y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = scale(x, 2.0);
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autograd, NonScalarRootIsRejected) {
  auto x = V::leaf({2}, {1.0, 2.0}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), Error);
}

TEST(Autograd, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    Rng rng(42);
    auto a = param({4, 5}, rng);
    auto b = param({5, 3}, rng);
    auto loss = mean(gelu(layer_norm(matmul(a, b))));
    backward(loss);
    std::vector<double> out(a.grad().begin(), a.grad().end());
    out.push_back(loss.item());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Ops, RequiredOpsCoverTheContract) {
  for (const char* name :
       {"matmul", "add", "sub", "mul", "scale", "gelu", "softmax", "layer_norm", "mean", "sum",
        "l1_diff", "squared_l2_diff", "concat_rows", "concat_cols", "gather_rows", "reshape",
        "transpose", "conv_transpose2d", "cross_entropy"}) {
    EXPECT_TRUE(required_ops().count(name)) << name;
    EXPECT_NO_THROW(require_op(name));
  }
  EXPECT_THROW(require_op("conv3d"), UsageError);
}

TEST(Ops, ShapeMismatchThrows) {
  auto a = V::zeros({2, 3});
  auto b = V::zeros({2, 3});
  EXPECT_THROW(matmul(a, b), Error);
  EXPECT_THROW(add(a, V::zeros({3, 2})), Error);
  const std::int32_t labels[] = {0, 5};
  EXPECT_THROW(cross_entropy(a, std::span<const std::int32_t>(labels)), Error);
}

TEST(Ops, SoftmaxRowsSumToOne) {
  Rng rng(3);
  auto x = param({3, 5}, rng, -5, 5);
  auto s = softmax(x);
  for (std::size_t r = 0; r < 3; ++r) {
    double acc = 0;
    for (std::size_t c = 0; c < 5; ++c) acc += s.value()[r * 5 + c];
    EXPECT_NEAR(acc, 1.0, 1e-14);
  }
}

TEST(Ops, ConvTransposeMatchesHandComputation) {
  // 1 input channel 2x2, kernel 2x2, stride 2: each pixel stamps k * x.
  auto x = V::leaf({1, 2, 2}, {1, 2, 3, 4});
  auto w = V::leaf({1, 1, 2, 2}, {1, 10, 100, 1000});
  auto b = V::leaf({1}, {0.5});
  auto y = conv_transpose2d(x, w, b, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 4, 4}));
  EXPECT_DOUBLE_EQ(y.value()[0], 1.5);
  EXPECT_DOUBLE_EQ(y.value()[1], 10.5);
  EXPECT_DOUBLE_EQ(y.value()[4], 100.5);
  EXPECT_DOUBLE_EQ(y.value()[2], 2.5);
  EXPECT_DOUBLE_EQ(y.value()[15], 4000.5);
}

// Finite-difference checks of every primitive.
class OpGrad : public ::testing::Test {
 protected:
  Rng rng{11};
};

TEST_F(OpGrad, Matmul) {
  auto b = param({3, 2}, rng);
  expect_check([&](const V& x) { return sum(matmul(x, b)); }, rand_tensor({4, 3}, rng));
  auto a = param({4, 3}, rng);
  expect_check([&](const V& x) { return sum(mul(matmul(a, x), matmul(a, x))); },
               rand_tensor({3, 2}, rng));
}

TEST_F(OpGrad, ElementwiseAndScale) {
  auto c = param({2, 3}, rng);
  expect_check([&](const V& x) { return sum(mul(add(x, c), sub(x, c))); }, rand_tensor({2, 3}, rng));
  expect_check([&](const V& x) { return sum(mul(scale(x, -1.5), x)); }, rand_tensor({2, 3}, rng));
}

TEST_F(OpGrad, RowBroadcast) {
  auto a = param({3, 4}, rng);
  auto w = param({3, 4}, rng);
  expect_check([&](const V& r) { return sum(mul(add_row(a, r), w)); }, rand_tensor({4}, rng));
  expect_check([&](const V& r) { return sum(mul(mul_row(a, r), w)); }, rand_tensor({4}, rng));
}

TEST_F(OpGrad, GeluSoftmaxLayerNorm) {
  auto w = param({3, 4}, rng);
  expect_check([&](const V& x) { return sum(mul(gelu(x), w)); }, rand_tensor({3, 4}, rng));
  expect_check([&](const V& x) { return sum(mul(softmax(x), w)); }, rand_tensor({3, 4}, rng));
  expect_check([&](const V& x) { return sum(mul(layer_norm(x), w)); }, rand_tensor({3, 4}, rng));
}

TEST_F(OpGrad, ReductionsAndDistances) {
  auto c = param({2, 3}, rng, 2.0, 3.0);  // away from the L1 kink
  expect_check([&](const V& x) { return mean(mul(x, x)); }, rand_tensor({2, 3}, rng));
  expect_check([&](const V& x) { return l1_diff(x, c); }, rand_tensor({2, 3}, rng));
  expect_check([&](const V& x) { return squared_l2_diff(x, c); }, rand_tensor({2, 3}, rng));
  expect_check([&](const V& x) { return squared_l2_diff(c, x); }, rand_tensor({2, 3}, rng));
}

TEST_F(OpGrad, ConcatGatherSliceReshapeTranspose) {
  auto other = param({2, 3}, rng);
  auto w = param({4, 3}, rng);
  expect_check(
      [&](const V& x) {
        const V parts[] = {x, other};
        return sum(mul(concat_rows<double>(parts), w));
      },
      rand_tensor({2, 3}, rng));
  auto w2 = param({2, 6}, rng);
  expect_check(
      [&](const V& x) {
        const V parts[] = {other, x};
        return sum(mul(concat_cols<double>(parts), w2));
      },
      rand_tensor({2, 3}, rng));
  const std::size_t rows[] = {2, 0, 2};
  auto w3 = param({3, 3}, rng);
  expect_check([&](const V& x) { return sum(mul(gather_rows(x, rows), w3)); },
               rand_tensor({3, 3}, rng));
  auto w4 = param({3, 2}, rng);
  expect_check([&](const V& x) { return sum(mul(slice_cols(x, 1, 3), w4)); },
               rand_tensor({3, 4}, rng));
  auto w5 = param({3, 2}, rng);
  expect_check([&](const V& x) { return sum(mul(reshape(transpose(x), {3, 2}), w5)); },
               rand_tensor({2, 3}, rng));
}

TEST_F(OpGrad, ConvTranspose) {
  auto w = param({3, 2, 2, 2}, rng);
  auto b = param({2}, rng);
  auto m = param({2, 6, 4}, rng);
  auto x0 = rand_tensor({3, 3, 2}, rng);
  expect_check([&](const V& x) { return sum(mul(conv_transpose2d(x, w, b, 2), m)); }, x0);
  auto xv = V::leaf(x0);
  expect_check([&](const V& wv) { return sum(mul(conv_transpose2d(xv, wv, b, 2), m)); },
               rand_tensor({3, 2, 2, 2}, rng));
  expect_check([&](const V& bv) { return sum(mul(conv_transpose2d(xv, w, bv, 2), m)); },
               rand_tensor({2}, rng));
}

TEST_F(OpGrad, CrossEntropy) {
  const std::int32_t labels[] = {0, 2, 1, 2};
  expect_check([&](const V& x) { return cross_entropy(x, std::span<const std::int32_t>(labels)); },
               rand_tensor({4, 3}, rng));
}

TEST(GradCheck, SumOfSquares) {
  const Tensor<double> x({3}, {1.0, 2.0, 3.0});
  const auto r = grad_check([](const V& v) { return sum(mul(v, v)); }, x, 1e-5, 1e-4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_rel_err, 1e-7);
  auto v = V::leaf(x, true);
  backward(sum(mul(v, v)));
  EXPECT_EQ(std::vector<double>(v.grad().begin(), v.grad().end()), (std::vector<double>{2, 4, 6}));
}

TEST(GradCheck, ConstantFunction) {
  const Tensor<double> x({3}, {1.0, 2.0, 3.0});
  const auto r = grad_check([](const V& v) { return add(scale(sum(v), 0.0), V::scalar(5.0)); }, x);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_rel_err, 0.0);
}

TEST(GradCheck, L1AwayFromKinksGivesSignVector) {
  const Tensor<double> x({3}, {1.0, -2.0, 0.5});
  auto c = V::leaf({3}, {0.0, 0.0, 1.0});
  const auto f = [&](const V& v) { return l1_diff(v, c); };
  EXPECT_TRUE(grad_check(f, x, 1e-5, 1e-4).pass);
  auto v = V::leaf(x, true);
  backward(f(v));
  EXPECT_EQ(std::vector<double>(v.grad().begin(), v.grad().end()),
            (std::vector<double>{1, -1, -1}));
}

TEST(GradCheck, DetectsWrongGradient) {
  // detach hides the x dependence from backward but not from the FD probe.
  const Tensor<double> x({2}, {1.0, 2.0});
  const auto r = grad_check([](const V& v) { return sum(mul(detach(v), v)); }, x);
  EXPECT_FALSE(r.pass);
}

TEST(GradCheck, NonFiniteValueNamesCoordinate) {
  const Tensor<double> x({2}, {1.0, 2.0});
  const auto f = [](const V& v) {
    return v.value()[1] > 2.0 ? V::scalar(std::nan("")) : sum(v);
  };
  try {
    grad_check(f, x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("x[1]"), std::string::npos) << e.what();
  }
}

TEST(GradCheck, NamedParams) {
  Rng rng(5);
  auto a = param({2, 2}, rng);
  auto b = param({2}, rng);
  std::vector<NamedParam> ps{{"a", a}, {"b", b}};
  const auto r = grad_check_params([&] { return sum(gelu(add_row(a, b))); }, ps);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.coordinates, 6u);
}
