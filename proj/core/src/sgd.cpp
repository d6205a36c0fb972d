#include "adcnn/sgd.hpp"

#include <cmath>
#include <string>

namespace adcnn {

void SgdConfig::validate() const {
  if (!(base_lr > 0)) throw ConfigError("base_lr must be > 0");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must be in (0, 1]");
  if (stepsize < 1) throw ConfigError("stepsize must be >= 1");
}

double lr_at(std::uint64_t iteration, const SgdConfig& config) {
  const auto drops = static_cast<double>(iteration / config.stepsize);
  return config.base_lr * std::pow(config.gamma, drops);
}

namespace {

template <typename T>
void update_tensor(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicTensor<T>& velocity,
                   T lr, T momentum, T decay) {
  require_shape(grad.shape(), param.shape(), "sgd gradient");
  require_shape(velocity.shape(), param.shape(), "sgd velocity");
  T* p = param.data();
  const T* g = grad.data();
  T* v = velocity.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T decayed = g[i] + decay * p[i];
    v[i] = momentum * v[i] - lr * decayed;
    p[i] += v[i];
  }
}

}  // namespace

template <typename T>
void sgd_step(NetworkParams<T>& params, const ParamTensors<T>& grads, Velocity<T>& velocity,
              const SgdConfig& config, std::uint64_t iteration) {
  if (grads.size() != params.layers.size() || velocity.size() != params.layers.size()) {
    throw DimensionError("sgd_step: params, gradients and velocity have different layer counts");
  }
  const T lr = static_cast<T>(lr_at(iteration, config));
  const T momentum = static_cast<T>(config.momentum);
  const T decay = static_cast<T>(config.weight_decay);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    if (p.weights.empty()) continue;
    update_tensor(p.weights, grads[l].weights, velocity[l].weights, lr, momentum, decay);
    update_tensor(p.bias, grads[l].bias, velocity[l].bias, lr, momentum, decay);
  }
}

template void sgd_step(NetworkParams<float>&, const ParamTensors<float>&, Velocity<float>&,
                       const SgdConfig&, std::uint64_t);
template void sgd_step(NetworkParams<double>&, const ParamTensors<double>&, Velocity<double>&,
                       const SgdConfig&, std::uint64_t);

}  // namespace adcnn
