#include <array>
#include <cstring>

#include "adcnn/byte_io.hpp"
#include "adcnn/lenet.hpp"

namespace adcnn {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'L', 'N', 'T', '5'};

void put_tensor(ByteWriter& out, const Tensor& t) {
  out.u8(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) out.u32(static_cast<std::uint32_t>(d));
  for (float v : t.values()) out.f32(v);
}

Tensor get_tensor(ByteReader& in, const Shape& expected) {
  const std::size_t rank = in.u8();
  Shape shape(rank);
  for (std::size_t& d : shape) d = in.u32();
  if (shape != expected) {
    throw DimensionError("checkpoint tensor " + shape_string(shape) + " where " +
                         shape_string(expected) + " was expected");
  }
  std::vector<float> values(shape_volume(shape));
  for (float& v : values) v = in.f32();
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams<float>& params) {
  ByteWriter out;
  out.raw(kMagic);
  out.u16(kCheckpointVersion);
  out.u64(params.fingerprint());
  for (const auto& layer : params.layers) {
    if (layer.weights.empty()) continue;
    put_tensor(out, layer.weights);
    put_tensor(out, layer.bias);
  }
  return std::move(out.bytes());
}

void save_checkpoint(const NetworkParams<float>& params, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(params));
}

NetworkParams<float> decode_checkpoint(std::span<const std::uint8_t> bytes,
                                       const LayerSpec& expected) {
  ByteReader in(bytes);
  const auto magic = in.raw(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("not a checkpoint: bad magic");
  }
  const std::uint16_t version = in.u16();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t fingerprint = in.u64();
  if (fingerprint != expected.fingerprint()) {
    throw FingerprintError("checkpoint was written for a different architecture than '" +
                           expected.serialize() + "'");
  }

  // Shapes come from a freshly initialised template so the loader and
  // init_params agree on layout by construction.
  NetworkParams<float> params = init_params<float>(expected, 0);
  for (auto& layer : params.layers) {
    if (layer.weights.empty()) continue;
    layer.weights = get_tensor(in, layer.weights.shape());
    layer.bias = get_tensor(in, layer.bias.shape());
  }
  if (in.remaining() != 0) {
    throw CorruptionError("checkpoint has " + std::to_string(in.remaining()) + " trailing bytes");
  }
  return params;
}

NetworkParams<float> load_checkpoint(const std::filesystem::path& path, const LayerSpec& expected) {
  return decode_checkpoint(read_file(path), expected);
}

}  // namespace adcnn
