#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "adcnn/errors.hpp"
#include "adcnn/layers.hpp"
#include "adcnn/rng.hpp"
#include "support/oracles.hpp"

using namespace adcnn;
using namespace adcnn::testing;

namespace {

constexpr int kInstances = 20;

// Scalar objective <layer(x), r> so that dL/dout = r.
struct ConvCase {
  TensorD x, w, b, r;
};

ConvCase make_conv_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t C = 1 + rng.below(3), F = 1 + rng.below(4), m = 2 + rng.below(4);
  const std::size_t H = m + 1 + rng.below(6), W = m + 1 + rng.below(6);
  ConvCase c;
  c.x = random_tensor({C, H, W}, rng);
  c.w = random_tensor({F, C, m, m}, rng);
  c.b = random_tensor({F}, rng);
  c.r = random_tensor({F, H - m + 1, W - m + 1}, rng);
  return c;
}

}  // namespace

TEST(Tensor, RejectsZeroDimensions) {
  EXPECT_THROW(TensorD(Shape{3, 0}), DimensionError);
  EXPECT_THROW(TensorD(Shape{2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Tensor, RowMajorIndexing) {
  TensorD t(Shape{2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  EXPECT_EQ(t.at(1, 2, 3), 23.0);
  EXPECT_EQ(t.at(1, 0, 0), 12.0);
  EXPECT_EQ(t.reshaped({6, 4}).at(5, 3), 23.0);
  EXPECT_THROW(t.reshape({5, 5}), DimensionError);
}

TEST(Conv, MatchesDirectLoopOracle) {
  for (int s = 0; s < kInstances; ++s) {
    const ConvCase c = make_conv_case(100 + s);
    const TensorD got = conv2d_forward(c.x, c.w, c.b);
    const TensorD want = naive_conv(c.x, c.w, c.b);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv, LinearInInput) {
  Rng rng(7);
  const TensorD w = random_tensor({3, 2, 3, 3}, rng);
  const TensorD zero_b(Shape{3});
  const TensorD a = random_tensor({2, 7, 6}, rng), b = random_tensor({2, 7, 6}, rng);
  TensorD sum = a;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.5 * a[i] - 0.75 * b[i];
  const TensorD ya = conv2d_forward(a, w, zero_b), yb = conv2d_forward(b, w, zero_b);
  const TensorD ys = conv2d_forward(sum, w, zero_b);
  for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(ys[i], 2.5 * ya[i] - 0.75 * yb[i], 1e-12);
}

TEST(Conv, ShapeErrors) {
  EXPECT_THROW(conv2d_forward(TensorD(Shape{2, 8, 8}), TensorD(Shape{4, 3, 5, 5}), TensorD(Shape{4})),
               DimensionError);
  EXPECT_THROW(conv2d_forward(TensorD(Shape{1, 4, 4}), TensorD(Shape{4, 1, 5, 5}), TensorD(Shape{4})),
               DimensionError);
  EXPECT_THROW(conv2d_forward(TensorD(Shape{1, 8, 8}), TensorD(Shape{4, 1, 5, 5}), TensorD(Shape{3})),
               DimensionError);
}

TEST(Conv, GradientMatchesFiniteDifferences) {
  for (int s = 0; s < kInstances; ++s) {
    ConvCase c = make_conv_case(200 + s);
    const ConvGrads<double> g = conv2d_backward(c.x, ConvKernel<double>{c.w, c.b}, c.r);
    const auto objective = [&] { return dot(conv2d_forward(c.x, c.w, c.b), c.r); };
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      EXPECT_LE(relative_error(g.input[i], central_difference(objective, c.x.values()[i])), kFdTolerance);
    }
    for (std::size_t i = 0; i < c.w.size(); ++i) {
      EXPECT_LE(relative_error(g.weights[i], central_difference(objective, c.w.values()[i])), kFdTolerance);
    }
    for (std::size_t i = 0; i < c.b.size(); ++i) {
      EXPECT_LE(relative_error(g.bias[i], central_difference(objective, c.b.values()[i])), kFdTolerance);
    }
  }
}

TEST(Dense, GradientMatchesFiniteDifferences) {
  for (int s = 0; s < kInstances; ++s) {
    Rng rng(300 + s);
    const std::size_t n = 1 + rng.below(20), k = 1 + rng.below(10);
    TensorD x = random_tensor({n}, rng), w = random_tensor({k, n}, rng), b = random_tensor({k}, rng);
    const TensorD r = random_tensor({k}, rng);
    const DenseGrads<double> g = fc_backward(x, w, r);
    const auto objective = [&] { return dot(fc_forward(x, w, b), r); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LE(relative_error(g.input[i], central_difference(objective, x.values()[i])), kFdTolerance);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      EXPECT_LE(relative_error(g.weights[i], central_difference(objective, w.values()[i])), kFdTolerance);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_LE(relative_error(g.bias[i], central_difference(objective, b.values()[i])), kFdTolerance);
    }
  }
}

TEST(Dense, FlattensHigherRankInput) {
  Rng rng(9);
  const TensorD x = random_tensor({2, 3, 3}, rng);
  const TensorD w = random_tensor({4, 18}, rng), b = random_tensor({4}, rng);
  const TensorD y = fc_forward(x, w, b);
  for (std::size_t o = 0; o < 4; ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < 18; ++i) s += w.at(o, i) * x[i];
    EXPECT_NEAR(y[o], s, 1e-12);
  }
  EXPECT_THROW(fc_forward(x, TensorD(Shape{4, 17}), b), DimensionError);
}

TEST(MaxPool, GradientMatchesFiniteDifferences) {
  for (int s = 0; s < kInstances; ++s) {
    Rng rng(400 + s);
    const std::size_t C = 1 + rng.below(3), H = 2 * (1 + rng.below(5)), W = 2 * (1 + rng.below(5));
    TensorD x = random_tensor({C, H, W}, rng);
    const TensorD r = random_tensor({C, H / 2, W / 2}, rng);
    const PoolResult<double> p = maxpool2x2_forward(x);
    const TensorD gx = maxpool2x2_backward(p.argmax, r);
    const auto objective = [&] { return dot(maxpool2x2_forward(x).output, r); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LE(relative_error(gx[i], central_difference(objective, x.values()[i])), kFdTolerance);
    }
  }
}

TEST(MaxPool, GradientMassIsConserved) {
  Rng rng(11);
  const TensorD x = random_tensor({3, 8, 6}, rng);
  const TensorD r = random_tensor({3, 4, 3}, rng);
  const TensorD gx = maxpool2x2_backward(maxpool2x2_forward(x).argmax, r);
  double in = 0, out = 0;
  for (double v : gx.values()) in += v;
  for (double v : r.values()) out += v;
  EXPECT_NEAR(in, out, 1e-12);
  std::size_t nonzero = 0;
  for (double v : gx.values()) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, r.size());
}

TEST(MaxPool, TiesGoToFirstInRowMajorOrder) {
  TensorD x(Shape{1, 2, 2}, std::vector<double>{5, 5, 5, 5});
  const PoolResult<double> p = maxpool2x2_forward(x);
  EXPECT_EQ(p.output[0], 5.0);
  EXPECT_EQ(p.argmax.winners[0], 0u);
  const TensorD g = maxpool2x2_backward(p.argmax, TensorD(Shape{1, 1, 1}, 1.0));
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1] + g[2] + g[3], 0.0);
}

TEST(MaxPool, OddDimensionsRejected) {
  EXPECT_THROW(maxpool2x2_forward(TensorD(Shape{1, 3, 4})), DimensionError);
}

TEST(Relu, GradientMatchesFiniteDifferences) {
  for (int s = 0; s < kInstances; ++s) {
    Rng rng(500 + s);
    TensorD x = random_away_from_zero({1 + rng.below(30)}, rng);
    const TensorD r = random_tensor(x.shape(), rng);
    const TensorD gx = relu_backward(x, r);
    const auto objective = [&] { return dot(relu_forward(x), r); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LE(relative_error(gx[i], central_difference(objective, x.values()[i])), kFdTolerance);
    }
  }
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  for (int s = 0; s < kInstances; ++s) {
    Rng rng(600 + s);
    const std::size_t k = 2 + rng.below(6);
    TensorD z = random_tensor({k}, rng, -4.0, 4.0);
    const std::size_t label = rng.below(k);
    const LossGrad<double> lg = softmax_cross_entropy(z, label);
    const auto objective = [&] {
      return reference_cross_entropy({z.values().begin(), z.values().end()}, label);
    };
    EXPECT_NEAR(lg.loss, objective(), 1e-12);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_LE(relative_error(lg.grad_logits[i], central_difference(objective, z.values()[i])),
                kFdTolerance);
    }
  }
}

TEST(SoftmaxCrossEntropy, StableForLargeLogits) {
  const TensorD z(Shape{2}, std::vector<double>{1000.0, -1000.0});
  const LossGrad<double> a = softmax_cross_entropy(z, 0);
  const LossGrad<double> b = softmax_cross_entropy(z, 1);
  EXPECT_TRUE(std::isfinite(a.loss));
  EXPECT_NEAR(a.loss, 0.0, 1e-12);
  EXPECT_NEAR(b.loss, 2000.0, 1e-9);
  const TensorD p = softmax(z);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
  EXPECT_THROW(softmax_cross_entropy(z, 2), DimensionError);
}

TEST(SoftmaxCrossEntropy, ProbabilitiesSumToOne) {
  Rng rng(13);
  for (int s = 0; s < 50; ++s) {
    const TensorD p = softmax(random_tensor({2 + rng.below(9)}, rng, -30.0, 30.0));
    double sum = 0;
    for (double v : p.values()) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(FloatPath, AgreesWithDoublePath) {
  Rng rng(17);
  const TensorD x = random_tensor({1, 12, 12}, rng);
  const TensorD w = random_tensor({4, 1, 5, 5}, rng), b = random_tensor({4}, rng);
  const TensorD yd = conv2d_forward(x, w, b);
  const Tensor yf = conv2d_forward(x.cast<float>(), w.cast<float>(), b.cast<float>());
  for (std::size_t i = 0; i < yd.size(); ++i) EXPECT_NEAR(yf[i], yd[i], 1e-5);
}
