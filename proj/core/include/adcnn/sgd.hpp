#pragma once

#include <cstdint>

#include "adcnn/lenet.hpp"

namespace adcnn {

/// Momentum SGD with L2 weight decay and a step learning-rate policy.
struct SgdConfig {
  double base_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double gamma = 0.1;
  std::uint64_t stepsize = 10000;

  void validate() const;
};

/// base_lr * gamma^floor(iteration / stepsize)
double lr_at(std::uint64_t iteration, const SgdConfig& config);

template <typename T>
using Velocity = ParamTensors<T>;

/// For every parameter element, with lr = lr_at(iteration):
///   g' = grad + weight_decay * param
///   v  = momentum * v - lr * g'
///   param += v
/// Decay applies to biases as well as weights.
template <typename T>
void sgd_step(NetworkParams<T>& params, const ParamTensors<T>& grads, Velocity<T>& velocity,
              const SgdConfig& config, std::uint64_t iteration);

}  // namespace adcnn
