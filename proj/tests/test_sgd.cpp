#include <gtest/gtest.h>

#include <cmath>

#include "adcnn/errors.hpp"
#include "adcnn/sgd.hpp"

using namespace adcnn;

namespace {

LayerSpec tiny_spec() {
  LayerSpec s;
  s.in_channels = 1;
  s.in_height = 1;
  s.in_width = 1;
  s.layers = {LayerDef::dense(2, false)};
  return s;
}

}  // namespace

TEST(LrSchedule, StepValuesAreExact) {
  const SgdConfig c;
  for (std::uint64_t it : {0ull, 1ull, 5000ull, 9999ull}) EXPECT_EQ(lr_at(it, c), 0.01);
  for (std::uint64_t it : {10000ull, 15000ull, 19999ull}) EXPECT_EQ(lr_at(it, c), 0.01 * 0.1);
  for (std::uint64_t it : {20000ull, 29999ull}) EXPECT_EQ(lr_at(it, c), 0.01 * std::pow(0.1, 2.0));
  EXPECT_EQ(lr_at(30000, c), 0.01 * std::pow(0.1, 3.0));
}

TEST(LrSchedule, ValuesAreTheDecimalsWithinRounding) {
  const SgdConfig c;
  EXPECT_NEAR(lr_at(10000, c), 0.001, 1e-18);
  EXPECT_NEAR(lr_at(20000, c), 0.0001, 1e-19);
}

TEST(LrSchedule, ClosedFormForOtherSettings) {
  SgdConfig c;
  c.base_lr = 0.3;
  c.gamma = 0.5;
  c.stepsize = 7;
  for (std::uint64_t it = 0; it < 100; ++it) {
    EXPECT_EQ(lr_at(it, c), 0.3 * std::pow(0.5, static_cast<double>(it / 7)));
  }
}

TEST(SgdConfig, Validation) {
  SgdConfig c;
  c.stepsize = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.base_lr = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SgdStep, ScalarRecurrence) {
  // Constant gradient g, no decay: v1 = -lr g, v2 = -lr g (1 + mu), v3 = -lr g (1 + mu + mu^2).
  SgdConfig c;
  c.weight_decay = 0;
  auto params = init_params<double>(tiny_spec(), 1);
  params.layers[0].weights[0] = 0.0;
  params.layers[0].bias[0] = 0.0;
  ParamTensors<double> grads = zeros_like(params);
  grads[0].weights[0] = 2.0;
  Velocity<double> v = zeros_like(params);
  sgd_step(params, grads, v, c, 0);
  EXPECT_DOUBLE_EQ(params.layers[0].weights[0], -0.01 * 2.0);
  sgd_step(params, grads, v, c, 1);
  EXPECT_DOUBLE_EQ(v[0].weights[0], -0.01 * 2.0 * 1.9);
  EXPECT_DOUBLE_EQ(params.layers[0].weights[0], -0.01 * 2.0 * (1.0 + 1.9));
  sgd_step(params, grads, v, c, 2);
  EXPECT_DOUBLE_EQ(v[0].weights[0], -0.01 * 2.0 * (1.0 + 0.9 + 0.81));
}

TEST(SgdStep, WeightDecayAddsToGradient) {
  SgdConfig c;
  c.momentum = 0;
  auto params = init_params<double>(tiny_spec(), 1);
  params.layers[0].weights[0] = 4.0;
  params.layers[0].bias[0] = -2.0;
  const ParamTensors<double> grads = zeros_like(params);
  Velocity<double> v = zeros_like(params);
  sgd_step(params, grads, v, c, 0);
  EXPECT_DOUBLE_EQ(params.layers[0].weights[0], 4.0 - 0.01 * 0.0005 * 4.0);
  EXPECT_DOUBLE_EQ(params.layers[0].bias[0], -2.0 + 0.01 * 0.0005 * 2.0);
}

TEST(SgdStep, UsesScheduledRate) {
  SgdConfig c;
  c.weight_decay = 0;
  c.momentum = 0;
  c.stepsize = 3;
  auto params = init_params<double>(tiny_spec(), 1);
  params.layers[0].weights[0] = 0.0;
  ParamTensors<double> grads = zeros_like(params);
  grads[0].weights[0] = 1.0;
  Velocity<double> v = zeros_like(params);
  sgd_step(params, grads, v, c, 3);
  EXPECT_DOUBLE_EQ(params.layers[0].weights[0], -0.001);
}

TEST(SgdStep, ConvergesOnQuadratic) {
  // L = 0.5 * sum (p - t)^2 on the first unit.
  SgdConfig c;
  c.base_lr = 0.1;
  c.weight_decay = 0;
  auto params = init_params<double>(tiny_spec(), 3);
  Velocity<double> v = zeros_like(params);
  const double target = 1.75;
  for (std::uint64_t it = 0; it < 500; ++it) {
    ParamTensors<double> g = zeros_like(params);
    g[0].weights[0] = params.layers[0].weights[0] - target;
    g[0].bias[0] = params.layers[0].bias[0] + target;
    sgd_step(params, g, v, c, it);
  }
  EXPECT_NEAR(params.layers[0].weights[0], target, 1e-9);
  EXPECT_NEAR(params.layers[0].bias[0], -target, 1e-9);
}

TEST(SgdStep, LayoutMismatchRejected) {
  auto params = init_params<double>(tiny_spec(), 1);
  Velocity<double> v = zeros_like(params);
  ParamTensors<double> bad;
  EXPECT_THROW(sgd_step(params, bad, v, SgdConfig{}, 0), DimensionError);
}
