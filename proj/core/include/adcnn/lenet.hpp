#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adcnn/layers.hpp"
#include "adcnn/tensor.hpp"

namespace adcnn {

enum class LayerKind : std::uint8_t { Conv, MaxPool, Dense };

struct LayerDef {
  LayerKind kind = LayerKind::Conv;
  std::size_t units = 0;   // filters for Conv, width for Dense
  std::size_t kernel = 0;  // side length, Conv only
  bool relu = false;

  static LayerDef conv(std::size_t filters, std::size_t side, bool relu = true) {
    return {LayerKind::Conv, filters, side, relu};
  }
  static LayerDef maxpool() { return {LayerKind::MaxPool, 0, 0, false}; }
  static LayerDef dense(std::size_t width, bool relu) { return {LayerKind::Dense, width, 0, relu}; }

  friend bool operator==(const LayerDef&, const LayerDef&) = default;
};

/// Ordered architecture description. Dense layers flatten their input.
struct LayerSpec {
  std::size_t in_channels = 1;
  std::size_t in_height = 28;
  std::size_t in_width = 28;
  std::vector<LayerDef> layers;

  /// conv 20@5x5 -> pool -> conv 50@5x5 -> pool -> dense(hidden) -> dense(classes)
  static LayerSpec lenet5(std::size_t hidden_width = 500, std::size_t classes = 2);

  /// Output shape of every layer, index-aligned with `layers`. Throws
  /// DimensionError when consecutive shapes do not compose.
  std::vector<Shape> shape_chain() const;
  Shape input_shape() const { return {in_channels, in_height, in_width}; }
  std::size_t num_classes() const;

  /// Throws ConfigError/DimensionError on an unusable architecture.
  void validate() const;

  /// Canonical text form, e.g. "input 1x28x28; conv 20 5 relu; pool; ...".
  std::string serialize() const;
  /// FNV-1a of `serialize()`.
  std::uint64_t fingerprint() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Weights and bias of one layer; both empty for pooling layers.
template <typename T>
struct LayerParams {
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
struct NetworkParams {
  LayerSpec spec;
  std::uint64_t seed = 0;
  std::vector<LayerParams<T>> layers;

  std::uint64_t fingerprint() const { return spec.fingerprint(); }
  std::size_t parameter_count() const;
  bool all_finite() const;

  template <typename U>
  NetworkParams<U> cast() const {
    NetworkParams<U> out{spec, seed, {}};
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      out.layers.push_back({l.weights.template cast<U>(), l.bias.template cast<U>()});
    }
    return out;
  }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Same layout as NetworkParams, holding gradients or momentum buffers.
template <typename T>
using ParamTensors = std::vector<LayerParams<T>>;

/// Zero tensors shaped like `params`.
template <typename T>
ParamTensors<T> zeros_like(const NetworkParams<T>& params);

/// Per-layer activations kept from one forward pass, one entry per sample.
template <typename T>
struct LayerTrace {
  std::vector<BasicTensor<T>> inputs;
  std::vector<BasicTensor<T>> pre_activations;  // linear output before ReLU
  std::vector<ArgmaxMap> argmax;                // pooling layers only
};

template <typename T>
struct ActivationCache {
  std::size_t batch = 0;
  std::vector<LayerTrace<T>> layers;
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> logits;  // [B, classes]
  ActivationCache<T> cache;
};

template <typename T>
struct BackwardResult {
  ParamTensors<T> gradients;  // batch mean
  T mean_loss{};
};

struct Prediction {
  std::vector<std::size_t> labels;
  Tensor probabilities;  // [B, classes]
};

/// Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// For a conv layer fan_in = C*m*m and fan_out = F*m*m.
template <typename T>
NetworkParams<T> init_params(const LayerSpec& spec, std::uint64_t seed);

/// `batch` is [B, C, H, W] matching the spec's input shape.
template <typename T>
ForwardResult<T> forward(const NetworkParams<T>& params, const BasicTensor<T>& batch);

/// Logits only, without retaining a cache.
template <typename T>
BasicTensor<T> infer_logits(const NetworkParams<T>& params, const BasicTensor<T>& batch);

template <typename T>
BackwardResult<T> backward(const NetworkParams<T>& params, const ForwardResult<T>& forward_pass,
                           std::span<const std::size_t> labels);

/// argmax of the softmax probabilities; ties go to the lower class index.
Prediction predict(const NetworkParams<float>& params, const Tensor& batch);

/// Checkpoint file: "LNT5", u16 version, u64 spec fingerprint, then per
/// tensor a u8 rank, u32 dims and raw little-endian float32 values.
void save_checkpoint(const NetworkParams<float>& params, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const NetworkParams<float>& params);

/// Validates magic (FormatError), version (VersionError), fingerprint against
/// `expected` (FingerprintError) and tensor layout (TruncationError /
/// DimensionError). The creation seed is not stored and loads as 0.
NetworkParams<float> load_checkpoint(const std::filesystem::path& path,
                                     const LayerSpec& expected = LayerSpec::lenet5());
NetworkParams<float> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                       const LayerSpec& expected = LayerSpec::lenet5());

inline constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace adcnn
