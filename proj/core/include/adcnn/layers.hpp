#pragma once

// Per-sample forward and backward math for the layer types of the LeNet-5
// family: valid stride-1 convolution, 2x2 max pooling, dense, ReLU and
// softmax cross-entropy. Every function is pure; tensors are [C,H,W] for
// feature maps and rank-1 for dense activations.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "adcnn/tensor.hpp"

namespace adcnn {

template <typename T>
struct ConvKernel {
  BasicTensor<T> weights;  // [F, C, m, m]
  BasicTensor<T> bias;     // [F]

  std::size_t filters() const { return weights.dim(0); }
  std::size_t channels() const { return weights.dim(1); }
  std::size_t side() const { return weights.dim(2); }

  /// Throws DimensionError unless weights are [F,C,m,m] and bias is [F].
  void validate() const;
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;    // empty when not requested
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

/// Flat index of the winning input element for every pooled output cell.
struct ArgmaxMap {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::uint32_t> winners;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  ArgmaxMap argmax;
};

template <typename T>
struct LossGrad {
  T loss{};
  BasicTensor<T> probabilities;
  BasicTensor<T> grad_logits;
};

/// out[f,i,j] = bias[f] + sum_{c,a,b} input[c,i+a,j+b] * weights[f,c,a,b]
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const ConvKernel<T>& kernel);

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

/// Gradients of a valid convolution. The input gradient is the full
/// correlation of grad_out with the kernel:
///   dE/dy[c,i,j] = sum_{f,a,b} dE/dx[f,i-a,j-b] * w[f,c,a,b]
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const ConvKernel<T>& kernel,
                             const BasicTensor<T>& grad_out);

/// Accumulating form used by the network's batch loop. `acc_weights` and
/// `acc_bias` are added to; `grad_input` is overwritten when non-null.
template <typename T>
void conv2d_backward_accumulate(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const BasicTensor<T>& grad_out, BasicTensor<T>& acc_weights,
                                BasicTensor<T>& acc_bias, BasicTensor<T>* grad_input);

/// Disjoint 2x2 windows. Ties resolve to the first element in row-major order.
template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const ArgmaxMap& argmax, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                          const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> fc_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                          const BasicTensor<T>& grad_out);

template <typename T>
void fc_backward_accumulate(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                            const BasicTensor<T>& grad_out, BasicTensor<T>& acc_weights,
                            BasicTensor<T>& acc_bias, BasicTensor<T>* grad_input);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Passes `grad_out` where the forward input was strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& forward_input, const BasicTensor<T>& grad_out);

/// Max-subtracted softmax.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

/// loss = -ln p[true_class], grad = p - onehot(true_class).
template <typename T>
LossGrad<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::size_t true_class);

}  // namespace adcnn
