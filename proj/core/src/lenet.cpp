#include "adcnn/lenet.hpp"

#include <cmath>
#include <sstream>

#include "adcnn/byte_io.hpp"
#include "adcnn/rng.hpp"

namespace adcnn {

LayerSpec LayerSpec::lenet5(std::size_t hidden_width, std::size_t classes) {
  LayerSpec spec;
  spec.layers = {
      LayerDef::conv(20, 5),
      LayerDef::maxpool(),
      LayerDef::conv(50, 5),
      LayerDef::maxpool(),
      LayerDef::dense(hidden_width, true),
      LayerDef::dense(classes, false),
  };
  return spec;
}

std::vector<Shape> LayerSpec::shape_chain() const {
  std::vector<Shape> chain;
  chain.reserve(layers.size());
  Shape current = input_shape();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerDef& def = layers[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    switch (def.kind) {
      case LayerKind::Conv: {
        if (current.size() != 3) {
          throw DimensionError(where + "convolution needs a [C,H,W] input, got " +
                               shape_string(current));
        }
        if (def.units == 0 || def.kernel == 0) {
          throw DimensionError(where + "convolution needs filters >= 1 and kernel >= 1");
        }
        if (current[1] < def.kernel || current[2] < def.kernel) {
          throw DimensionError(where + "input " + shape_string(current) + " smaller than kernel " +
                               std::to_string(def.kernel));
        }
        current = {def.units, current[1] - def.kernel + 1, current[2] - def.kernel + 1};
        break;
      }
      case LayerKind::MaxPool: {
        if (current.size() != 3 || current[1] % 2 != 0 || current[2] % 2 != 0) {
          throw DimensionError(where + "2x2 pooling needs even [C,H,W] input, got " +
                               shape_string(current));
        }
        current = {current[0], current[1] / 2, current[2] / 2};
        break;
      }
      case LayerKind::Dense: {
        if (def.units == 0) throw DimensionError(where + "dense width must be >= 1");
        current = {def.units};
        break;
      }
    }
    chain.push_back(current);
  }
  return chain;
}

std::size_t LayerSpec::num_classes() const {
  if (layers.empty()) throw ConfigError("layer spec is empty");
  return layers.back().units;
}

void LayerSpec::validate() const {
  if (in_channels == 0 || in_height == 0 || in_width == 0) {
    throw ConfigError("layer spec input dimensions must be positive");
  }
  if (layers.empty()) throw ConfigError("layer spec has no layers");
  const LayerDef& last = layers.back();
  if (last.kind != LayerKind::Dense || last.relu) {
    throw ConfigError("last layer must be a linear dense layer feeding the softmax");
  }
  if (last.units < 2) throw ConfigError("classifier needs at least two classes");
  (void)shape_chain();
}

std::string LayerSpec::serialize() const {
  std::ostringstream os;
  os << "input " << in_channels << 'x' << in_height << 'x' << in_width;
  for (const LayerDef& def : layers) {
    switch (def.kind) {
      case LayerKind::Conv:
        os << ";conv " << def.units << ' ' << def.kernel;
        break;
      case LayerKind::MaxPool:
        os << ";pool 2";
        break;
      case LayerKind::Dense:
        os << ";dense " << def.units;
        break;
    }
    if (def.kind != LayerKind::MaxPool) os << (def.relu ? " relu" : " linear");
  }
  return os.str();
}

std::uint64_t LayerSpec::fingerprint() const { return fnv1a64(serialize()); }

template <typename T>
std::size_t NetworkParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename T>
bool NetworkParams<T>::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

namespace {

/// Parameter shapes for one layer given its input shape; empty for pooling.
std::pair<Shape, Shape> param_shapes(const LayerDef& def, const Shape& in) {
  switch (def.kind) {
    case LayerKind::Conv:
      return {{def.units, in[0], def.kernel, def.kernel}, {def.units}};
    case LayerKind::Dense:
      return {{def.units, shape_volume(in)}, {def.units}};
    case LayerKind::MaxPool:
      break;
  }
  return {{}, {}};
}

template <typename T>
void check_params(const NetworkParams<T>& params) {
  const auto chain = params.spec.shape_chain();
  if (params.layers.size() != params.spec.layers.size()) {
    throw DimensionError("parameter list has " + std::to_string(params.layers.size()) +
                         " layers, spec has " + std::to_string(params.spec.layers.size()));
  }
  Shape in = params.spec.input_shape();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto [w, b] = param_shapes(params.spec.layers[l], in);
    if (!w.empty()) {
      require_shape(params.layers[l].weights.shape(), w, "layer weights");
      require_shape(params.layers[l].bias.shape(), b, "layer bias");
    }
    in = chain[l];
  }
}

template <typename T>
BasicTensor<T> sample_of(const BasicTensor<T>& batch, std::size_t b, const Shape& sample_shape) {
  const std::size_t n = shape_volume(sample_shape);
  const T* src = batch.data() + b * n;
  return BasicTensor<T>(sample_shape, std::vector<T>(src, src + n));
}

template <typename T>
void check_batch(const LayerSpec& spec, const BasicTensor<T>& batch) {
  const Shape expected{batch.rank() == 4 ? batch.dim(0) : 0, spec.in_channels, spec.in_height,
                       spec.in_width};
  if (batch.rank() != 4 || batch.shape() != expected) {
    throw DimensionError("network input must be [B," + std::to_string(spec.in_channels) + "," +
                         std::to_string(spec.in_height) + "," + std::to_string(spec.in_width) +
                         "], got " + shape_string(batch.shape()));
  }
}

/// Runs one sample through the network; records into `cache` slot `b` when given.
template <typename T>
BasicTensor<T> forward_sample(const NetworkParams<T>& params, const std::vector<Shape>& chain,
                              BasicTensor<T> x, ActivationCache<T>* cache, std::size_t b) {
  for (std::size_t l = 0; l < params.spec.layers.size(); ++l) {
    const LayerDef& def = params.spec.layers[l];
    const LayerParams<T>& p = params.layers[l];
    if (cache) cache->layers[l].inputs[b] = x;
    switch (def.kind) {
      case LayerKind::Conv:
      case LayerKind::Dense: {
        BasicTensor<T> z = def.kind == LayerKind::Conv ? conv2d_forward(x, p.weights, p.bias)
                                                       : fc_forward(x, p.weights, p.bias);
        if (def.relu) {
          x = relu_forward(z);
          if (cache) cache->layers[l].pre_activations[b] = std::move(z);
        } else {
          x = std::move(z);
        }
        break;
      }
      case LayerKind::MaxPool: {
        PoolResult<T> r = maxpool2x2_forward(x);
        x = std::move(r.output);
        if (cache) cache->layers[l].argmax[b] = std::move(r.argmax);
        break;
      }
    }
    require_shape(x.shape(), chain[l], "layer output");
  }
  return x;
}

}  // namespace

template <typename T>
ParamTensors<T> zeros_like(const NetworkParams<T>& params) {
  ParamTensors<T> out;
  out.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    out.push_back({l.weights.empty() ? BasicTensor<T>() : BasicTensor<T>(l.weights.shape()),
                   l.bias.empty() ? BasicTensor<T>() : BasicTensor<T>(l.bias.shape())});
  }
  return out;
}

template <typename T>
NetworkParams<T> init_params(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto chain = spec.shape_chain();
  NetworkParams<T> params{spec, seed, {}};
  Rng rng(seed);
  Shape in = spec.input_shape();
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerDef& def = spec.layers[l];
    LayerParams<T> lp;
    const auto [wshape, bshape] = param_shapes(def, in);
    if (!wshape.empty()) {
      double fan_in = 0, fan_out = 0;
      if (def.kind == LayerKind::Conv) {
        const double area = static_cast<double>(def.kernel * def.kernel);
        fan_in = static_cast<double>(in[0]) * area;
        fan_out = static_cast<double>(def.units) * area;
      } else {
        fan_in = static_cast<double>(shape_volume(in));
        fan_out = static_cast<double>(def.units);
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      lp.weights = BasicTensor<T>(wshape);
      for (T& w : lp.weights.values()) w = static_cast<T>(rng.uniform(-limit, limit));
      lp.bias = BasicTensor<T>(bshape);
    }
    params.layers.push_back(std::move(lp));
    in = chain[l];
  }
  return params;
}

template <typename T>
ForwardResult<T> forward(const NetworkParams<T>& params, const BasicTensor<T>& batch) {
  check_params(params);
  check_batch(params.spec, batch);
  const auto chain = params.spec.shape_chain();
  const std::size_t batch_size = batch.dim(0);
  const std::size_t classes = params.spec.num_classes();

  ForwardResult<T> result;
  result.logits = BasicTensor<T>(Shape{batch_size, classes});
  result.cache.batch = batch_size;
  result.cache.layers.resize(params.spec.layers.size());
  for (std::size_t l = 0; l < params.spec.layers.size(); ++l) {
    auto& trace = result.cache.layers[l];
    trace.inputs.resize(batch_size);
    if (params.spec.layers[l].relu) trace.pre_activations.resize(batch_size);
    if (params.spec.layers[l].kind == LayerKind::MaxPool) trace.argmax.resize(batch_size);
  }

  for (std::size_t b = 0; b < batch_size; ++b) {
    BasicTensor<T> out = forward_sample(params, chain, sample_of(batch, b, params.spec.input_shape()),
                                        &result.cache, b);
    for (std::size_t k = 0; k < classes; ++k) result.logits.at(b, k) = out[k];
  }
  return result;
}

template <typename T>
BasicTensor<T> infer_logits(const NetworkParams<T>& params, const BasicTensor<T>& batch) {
  check_params(params);
  check_batch(params.spec, batch);
  const auto chain = params.spec.shape_chain();
  const std::size_t batch_size = batch.dim(0);
  const std::size_t classes = params.spec.num_classes();
  BasicTensor<T> logits(Shape{batch_size, classes});
  for (std::size_t b = 0; b < batch_size; ++b) {
    BasicTensor<T> out =
        forward_sample(params, chain, sample_of(batch, b, params.spec.input_shape()), static_cast<ActivationCache<T>*>(nullptr), b);
    for (std::size_t k = 0; k < classes; ++k) logits.at(b, k) = out[k];
  }
  return logits;
}

template <typename T>
BackwardResult<T> backward(const NetworkParams<T>& params, const ForwardResult<T>& forward_pass,
                           std::span<const std::size_t> labels) {
  const ActivationCache<T>& cache = forward_pass.cache;
  if (cache.layers.size() != params.spec.layers.size()) {
    throw DimensionError("activation cache does not match the network");
  }
  if (labels.size() != cache.batch || cache.batch == 0) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for a batch of " +
                         std::to_string(cache.batch));
  }
  const std::size_t classes = params.spec.num_classes();

  BackwardResult<T> result;
  result.gradients = zeros_like(params);
  T total_loss = 0;
  BasicTensor<T> grad_input;
  for (std::size_t b = 0; b < cache.batch; ++b) {
    BasicTensor<T> logits(Shape{classes});
    for (std::size_t k = 0; k < classes; ++k) logits[k] = forward_pass.logits.at(b, k);
    LossGrad<T> lg = softmax_cross_entropy(logits, labels[b]);
    total_loss += lg.loss;
    BasicTensor<T> grad = std::move(lg.grad_logits);

    for (std::size_t l = params.spec.layers.size(); l-- > 0;) {
      const LayerDef& def = params.spec.layers[l];
      const LayerTrace<T>& trace = cache.layers[l];
      LayerParams<T>& acc = result.gradients[l];
      BasicTensor<T>* gi = l > 0 ? &grad_input : nullptr;
      switch (def.kind) {
        case LayerKind::Conv:
          if (def.relu) grad = relu_backward(trace.pre_activations[b], grad);
          conv2d_backward_accumulate(trace.inputs[b], params.layers[l].weights, grad, acc.weights,
                                     acc.bias, gi);
          break;
        case LayerKind::Dense:
          if (def.relu) grad = relu_backward(trace.pre_activations[b], grad);
          fc_backward_accumulate(trace.inputs[b], params.layers[l].weights, grad, acc.weights,
                                 acc.bias, gi);
          break;
        case LayerKind::MaxPool:
          grad_input = maxpool2x2_backward(trace.argmax[b], grad);
          break;
      }
      if (l > 0) grad = std::move(grad_input);
    }
  }

  const T scale = T{1} / static_cast<T>(cache.batch);
  for (auto& lp : result.gradients) {
    for (T& v : lp.weights.values()) v *= scale;
    for (T& v : lp.bias.values()) v *= scale;
  }
  result.mean_loss = total_loss * scale;
  return result;
}

Prediction predict(const NetworkParams<float>& params, const Tensor& batch) {
  const Tensor logits = infer_logits(params, batch);
  const std::size_t batch_size = logits.dim(0), classes = logits.dim(1);
  Prediction out;
  out.probabilities = Tensor(logits.shape());
  out.labels.resize(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    Tensor row(Shape{classes});
    for (std::size_t k = 0; k < classes; ++k) row[k] = logits.at(b, k);
    const Tensor p = softmax(row);
    std::size_t best = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      out.probabilities.at(b, k) = p[k];
      if (p[k] > p[best]) best = k;
    }
    out.labels[b] = best;
  }
  return out;
}

#define ADCNN_INSTANTIATE_NETWORK(T)                                                         \
  template struct NetworkParams<T>;                                                          \
  template ParamTensors<T> zeros_like(const NetworkParams<T>&);                              \
  template NetworkParams<T> init_params<T>(const LayerSpec&, std::uint64_t);                 \
  template ForwardResult<T> forward(const NetworkParams<T>&, const BasicTensor<T>&);         \
  template BasicTensor<T> infer_logits(const NetworkParams<T>&, const BasicTensor<T>&);      \
  template BackwardResult<T> backward(const NetworkParams<T>&, const ForwardResult<T>&,      \
                                      std::span<const std::size_t>);

ADCNN_INSTANTIATE_NETWORK(float)
ADCNN_INSTANTIATE_NETWORK(double)

#undef ADCNN_INSTANTIATE_NETWORK

}  // namespace adcnn
