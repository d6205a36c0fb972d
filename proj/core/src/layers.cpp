#include "adcnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adcnn {

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(shape));
  }
}

template <typename T>
void check_kernel(const BasicTensor<T>& weights, const BasicTensor<T>& bias) {
  require_rank(weights.shape(), 4, "conv kernel weights");
  if (weights.dim(2) != weights.dim(3)) {
    throw DimensionError("conv kernel must be square, got " + shape_string(weights.shape()));
  }
  require_shape(bias.shape(), Shape{weights.dim(0)}, "conv kernel bias");
}

template <typename T>
void check_conv_operands(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                         const BasicTensor<T>& bias) {
  check_kernel(weights, bias);
  require_rank(input.shape(), 3, "conv2d input");
  const std::size_t m = weights.dim(2);
  if (input.dim(0) != weights.dim(1)) {
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(0)) +
                         " channels, kernel expects " + std::to_string(weights.dim(1)));
  }
  if (input.dim(1) < m || input.dim(2) < m) {
    throw DimensionError("conv2d: input " + shape_string(input.shape()) + " smaller than " +
                         std::to_string(m) + "x" + std::to_string(m) + " kernel");
  }
}

}  // namespace

template <typename T>
void ConvKernel<T>::validate() const {
  check_kernel(weights, bias);
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
  check_conv_operands(input, weights, bias);
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t filters = weights.dim(0), m = weights.dim(2);
  const std::size_t out_h = height - m + 1, out_w = width - m + 1;

  BasicTensor<T> out(Shape{filters, out_h, out_w});
  const T* in = input.data();
  const T* w = weights.data();
  for (std::size_t f = 0; f < filters; ++f) {
    T* plane = out.data() + f * out_h * out_w;
    std::fill(plane, plane + out_h * out_w, bias[f]);
    for (std::size_t c = 0; c < channels; ++c) {
      const T* in_plane = in + c * height * width;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          const T wv = w[((f * channels + c) * m + a) * m + b];
          for (std::size_t i = 0; i < out_h; ++i) {
            const T* src = in_plane + (i + a) * width + b;
            T* dst = plane + i * out_w;
            for (std::size_t j = 0; j < out_w; ++j) dst[j] += wv * src[j];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const ConvKernel<T>& kernel) {
  return conv2d_forward(input, kernel.weights, kernel.bias);
}

template <typename T>
void conv2d_backward_accumulate(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const BasicTensor<T>& grad_out, BasicTensor<T>& acc_weights,
                                BasicTensor<T>& acc_bias, BasicTensor<T>* grad_input) {
  check_conv_operands(input, weights, acc_bias);
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  const std::size_t filters = weights.dim(0), m = weights.dim(2);
  const std::size_t out_h = height - m + 1, out_w = width - m + 1;
  require_shape(grad_out.shape(), Shape{filters, out_h, out_w}, "conv2d grad_out");
  require_shape(acc_weights.shape(), weights.shape(), "conv2d weight accumulator");

  const T* in = input.data();
  const T* go = grad_out.data();
  const T* w = weights.data();
  T* gw = acc_weights.data();

  for (std::size_t f = 0; f < filters; ++f) {
    const T* go_plane = go + f * out_h * out_w;
    T bias_sum = 0;
    for (std::size_t k = 0; k < out_h * out_w; ++k) bias_sum += go_plane[k];
    acc_bias[f] += bias_sum;

    for (std::size_t c = 0; c < channels; ++c) {
      const T* in_plane = in + c * height * width;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          // Four partial sums give the compiler independent lanes while the
          // reduction order stays fixed.
          T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
          for (std::size_t i = 0; i < out_h; ++i) {
            const T* src = in_plane + (i + a) * width + b;
            const T* g = go_plane + i * out_w;
            std::size_t j = 0;
            for (; j + 4 <= out_w; j += 4) {
              s0 += g[j] * src[j];
              s1 += g[j + 1] * src[j + 1];
              s2 += g[j + 2] * src[j + 2];
              s3 += g[j + 3] * src[j + 3];
            }
            for (; j < out_w; ++j) s0 += g[j] * src[j];
          }
          gw[((f * channels + c) * m + a) * m + b] += (s0 + s1) + (s2 + s3);
        }
      }
    }
  }

  if (grad_input == nullptr) return;
  *grad_input = BasicTensor<T>(input.shape());
  T* gi = grad_input->data();
  // Scatter form of the full correlation: each grad_out cell spreads through
  // the kernel footprint it was computed from.
  for (std::size_t f = 0; f < filters; ++f) {
    const T* go_plane = go + f * out_h * out_w;
    for (std::size_t c = 0; c < channels; ++c) {
      T* gi_plane = gi + c * height * width;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          const T wv = w[((f * channels + c) * m + a) * m + b];
          for (std::size_t i = 0; i < out_h; ++i) {
            T* dst = gi_plane + (i + a) * width + b;
            const T* g = go_plane + i * out_w;
            for (std::size_t j = 0; j < out_w; ++j) dst[j] += wv * g[j];
          }
        }
      }
    }
  }
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const ConvKernel<T>& kernel,
                             const BasicTensor<T>& grad_out) {
  kernel.validate();
  ConvGrads<T> grads;
  grads.weights = BasicTensor<T>(kernel.weights.shape());
  grads.bias = BasicTensor<T>(kernel.bias.shape());
  conv2d_backward_accumulate(input, kernel.weights, grad_out, grads.weights, grads.bias,
                             &grads.input);
  return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
  require_rank(input.shape(), 3, "maxpool input");
  const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
  if (height % 2 != 0 || width % 2 != 0) {
    throw DimensionError("maxpool2x2 needs even spatial dims, got " + shape_string(input.shape()));
  }
  const std::size_t out_h = height / 2, out_w = width / 2;
  PoolResult<T> result{BasicTensor<T>(Shape{channels, out_h, out_w}),
                       ArgmaxMap{input.shape(), Shape{channels, out_h, out_w}, {}}};
  result.argmax.winners.resize(channels * out_h * out_w);

  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        std::size_t best = (c * height + 2 * i) * width + 2 * j;
        for (std::size_t a = 0; a < 2; ++a) {
          for (std::size_t b = 0; b < 2; ++b) {
            const std::size_t idx = (c * height + 2 * i + a) * width + 2 * j + b;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (c * out_h + i) * out_w + j;
        result.output[o] = input[best];
        result.argmax.winners[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const ArgmaxMap& argmax, const BasicTensor<T>& grad_out) {
  require_shape(grad_out.shape(), argmax.output_shape, "maxpool grad_out");
  if (argmax.winners.size() != grad_out.size() ||
      shape_volume(argmax.input_shape) != 4 * grad_out.size()) {
    throw DimensionError("maxpool argmax map does not match grad_out " +
                         shape_string(grad_out.shape()));
  }
  BasicTensor<T> grad_in(argmax.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    const std::uint32_t w = argmax.winners[o];
    if (w >= grad_in.size()) throw DimensionError("maxpool argmax index out of range");
    grad_in[w] += grad_out[o];
  }
  return grad_in;
}

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                          const BasicTensor<T>& bias) {
  require_rank(weights.shape(), 2, "dense weights");
  const std::size_t n_out = weights.dim(0), n_in = weights.dim(1);
  if (input.size() != n_in) {
    throw DimensionError("dense layer expects " + std::to_string(n_in) + " inputs, got " +
                         shape_string(input.shape()));
  }
  require_shape(bias.shape(), Shape{n_out}, "dense bias");

  BasicTensor<T> out(Shape{n_out});
  const T* x = input.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const T* row = weights.data() + o * n_in;
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n_in; i += 4) {
      s0 += row[i] * x[i];
      s1 += row[i + 1] * x[i + 1];
      s2 += row[i + 2] * x[i + 2];
      s3 += row[i + 3] * x[i + 3];
    }
    for (; i < n_in; ++i) s0 += row[i] * x[i];
    out[o] = bias[o] + ((s0 + s1) + (s2 + s3));
  }
  return out;
}

template <typename T>
void fc_backward_accumulate(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                            const BasicTensor<T>& grad_out, BasicTensor<T>& acc_weights,
                            BasicTensor<T>& acc_bias, BasicTensor<T>* grad_input) {
  require_rank(weights.shape(), 2, "dense weights");
  const std::size_t n_out = weights.dim(0), n_in = weights.dim(1);
  if (input.size() != n_in) {
    throw DimensionError("dense backward: input has " + std::to_string(input.size()) +
                         " elements, weights expect " + std::to_string(n_in));
  }
  if (grad_out.size() != n_out) {
    throw DimensionError("dense backward: grad_out has " + std::to_string(grad_out.size()) +
                         " elements, layer has " + std::to_string(n_out) + " outputs");
  }
  require_shape(acc_weights.shape(), weights.shape(), "dense weight accumulator");
  require_shape(acc_bias.shape(), Shape{n_out}, "dense bias accumulator");

  const T* x = input.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = grad_out[o];
    acc_bias[o] += g;
    T* row = acc_weights.data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) row[i] += g * x[i];
  }

  if (grad_input == nullptr) return;
  *grad_input = BasicTensor<T>(input.shape());
  T* gi = grad_input->data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = grad_out[o];
    const T* row = weights.data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) gi[i] += row[i] * g;
  }
}

template <typename T>
DenseGrads<T> fc_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                          const BasicTensor<T>& grad_out) {
  require_rank(weights.shape(), 2, "dense weights");
  DenseGrads<T> grads;
  grads.weights = BasicTensor<T>(weights.shape());
  grads.bias = BasicTensor<T>(Shape{weights.dim(0)});
  fc_backward_accumulate(input, weights, grad_out, grads.weights, grads.bias, &grads.input);
  return grads;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (T& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& forward_input, const BasicTensor<T>& grad_out) {
  require_shape(grad_out.shape(), forward_input.shape(), "relu grad_out");
  BasicTensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(forward_input[i] > T{0})) grad[i] = T{0};
  }
  return grad;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.size() < 2) throw DimensionError("softmax needs at least two logits");
  BasicTensor<T> p = logits;
  const T peak = *std::max_element(p.values().begin(), p.values().end());
  T total = 0;
  for (T& v : p.values()) {
    v = std::exp(v - peak);
    total += v;
  }
  for (T& v : p.values()) v /= total;
  return p;
}

template <typename T>
LossGrad<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::size_t true_class) {
  if (logits.size() < 2) throw DimensionError("softmax cross-entropy needs at least two logits");
  if (true_class >= logits.size()) {
    throw DimensionError("class index " + std::to_string(true_class) + " out of range for " +
                         std::to_string(logits.size()) + " logits");
  }
  const T peak = *std::max_element(logits.values().begin(), logits.values().end());
  T total = 0;
  for (T v : logits.values()) total += std::exp(v - peak);

  LossGrad<T> out;
  out.probabilities = softmax(logits);
  // log-sum-exp form stays accurate when p[true_class] underflows.
  out.loss = std::max(T{0}, std::log(total) - (logits[true_class] - peak));
  out.grad_logits = out.probabilities;
  out.grad_logits[true_class] -= T{1};
  return out;
}

#define ADCNN_INSTANTIATE_LAYERS(T)                                                              \
  template struct ConvKernel<T>;                                                                 \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const ConvKernel<T>&);           \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&);                                 \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const ConvKernel<T>&,             \
                                        const BasicTensor<T>&);                                  \
  template void conv2d_backward_accumulate(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                           const BasicTensor<T>&, BasicTensor<T>&,               \
                                           BasicTensor<T>&, BasicTensor<T>*);                    \
  template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);                              \
  template BasicTensor<T> maxpool2x2_backward(const ArgmaxMap&, const BasicTensor<T>&);          \
  template BasicTensor<T> fc_forward(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                     const BasicTensor<T>&);                                     \
  template DenseGrads<T> fc_backward(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                     const BasicTensor<T>&);                                     \
  template void fc_backward_accumulate(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                       const BasicTensor<T>&, BasicTensor<T>&, BasicTensor<T>&,  \
                                       BasicTensor<T>*);                                         \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                   \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
  template LossGrad<T> softmax_cross_entropy(const BasicTensor<T>&, std::size_t);

ADCNN_INSTANTIATE_LAYERS(float)
ADCNN_INSTANTIATE_LAYERS(double)

#undef ADCNN_INSTANTIATE_LAYERS

}  // namespace adcnn
