#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>

#include "adcnn/byte_io.hpp"
#include "adcnn/volume.hpp"

namespace adcnn {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

// Field offsets inside the 348-byte header.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffMagic = 344;

/// Reads fixed-width scalars; `swap` is set when the file's byte order
/// differs from the host's.
class HeaderView {
 public:
  HeaderView(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  std::int16_t i16(std::size_t off) const { return std::bit_cast<std::int16_t>(load<std::uint16_t>(off)); }
  std::int32_t i32(std::size_t off) const { return std::bit_cast<std::int32_t>(load<std::uint32_t>(off)); }
  float f32(std::size_t off) const { return std::bit_cast<float>(load<std::uint32_t>(off)); }
  double f64(std::size_t off) const { return std::bit_cast<double>(load<std::uint64_t>(off)); }

 private:
  template <typename U>
  U load(std::size_t off) const {
    U v = 0;
    std::memcpy(&v, bytes_.data() + off, sizeof(U));
    return swap_ ? byteswap(v) : v;
  }

  template <typename U>
  static U byteswap(U v) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xff));
    }
    return out;
  }

  std::span<const std::uint8_t> bytes_;
  bool swap_;
};

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

}  // namespace

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw FormatError("zlib inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk{};
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      if (rc == Z_BUF_ERROR) throw TruncationError("gzip stream ends early");
      throw FormatError(std::string("gzip stream is corrupt: ") + (zs.msg ? zs.msg : "unknown"));
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw TruncationError("gzip stream ends early");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("zlib deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("zlib deflate failed");
  out.resize(zs.total_out);
  return out;
}

Volume3D parse_nifti(std::span<const std::uint8_t> raw) {
  std::vector<std::uint8_t> inflated;
  std::span<const std::uint8_t> bytes = raw;
  if (is_gzip(raw)) {
    inflated = gzip_decompress(raw);
    bytes = inflated;
  }
  if (bytes.size() < kHeaderSize) {
    throw FormatError("NIfTI header needs 348 bytes, got " + std::to_string(bytes.size()));
  }

  const auto* magic = bytes.data() + kOffMagic;
  if (std::memcmp(magic, "ni1\0", 4) == 0) {
    throw UnsupportedError("two-file NIfTI (.hdr/.img) is not supported");
  }
  if (std::memcmp(magic, "n+1\0", 4) != 0) throw FormatError("bad NIfTI magic");

  // dim[0] must lie in 1..7; whichever byte order gives that is the file's.
  const HeaderView little(bytes, std::endian::native == std::endian::big);
  const HeaderView big(bytes, std::endian::native == std::endian::little);
  const auto plausible = [](std::int16_t d0) { return d0 >= 1 && d0 <= 7; };
  const HeaderView* hdr = nullptr;
  if (plausible(little.i16(kOffDim))) {
    hdr = &little;
  } else if (plausible(big.i16(kOffDim))) {
    hdr = &big;
  } else {
    throw FormatError("cannot determine NIfTI byte order from dim[0]");
  }
  if (hdr->i32(0) != static_cast<std::int32_t>(kHeaderSize)) {
    throw FormatError("NIfTI sizeof_hdr is not 348");
  }

  std::array<std::int64_t, 8> dim{};
  for (std::size_t i = 0; i < 8; ++i) dim[i] = hdr->i16(kOffDim + 2 * i);
  const bool three_d = dim[0] == 3 || (dim[0] == 4 && dim[4] == 1);
  if (!three_d) {
    throw UnsupportedError("only 3-D volumes are supported (dim[0] = " + std::to_string(dim[0]) + ")");
  }
  for (std::size_t i = 1; i <= 3; ++i) {
    if (dim[i] < 1) throw FormatError("NIfTI dim[" + std::to_string(i) + "] must be >= 1");
  }

  const auto datatype = hdr->i16(kOffDatatype);
  std::size_t width = 0;
  switch (static_cast<NiftiDatatype>(datatype)) {
    case NiftiDatatype::UInt8: width = 1; break;
    case NiftiDatatype::Int16: width = 2; break;
    case NiftiDatatype::Float32: width = 4; break;
    case NiftiDatatype::Float64: width = 8; break;
    default:
      throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(datatype));
  }

  const auto nx = static_cast<std::size_t>(dim[1]);
  const auto ny = static_cast<std::size_t>(dim[2]);
  const auto nz = static_cast<std::size_t>(dim[3]);
  std::array<double, 3> mm{};
  for (std::size_t i = 0; i < 3; ++i) {
    mm[i] = std::fabs(static_cast<double>(hdr->f32(kOffPixdim + 4 * (i + 1))));
    if (!(mm[i] > 0) || !std::isfinite(mm[i])) {
      throw FormatError("NIfTI pixdim[" + std::to_string(i + 1) + "] must be positive");
    }
  }

  const double vox_offset = hdr->f32(kOffVoxOffset);
  if (!(vox_offset >= static_cast<double>(kHeaderSize)) || !std::isfinite(vox_offset)) {
    throw FormatError("NIfTI vox_offset is below the header size");
  }
  const auto offset = static_cast<std::size_t>(vox_offset);
  const std::size_t count = nx * ny * nz;
  if (offset > bytes.size() || (bytes.size() - offset) / width < count) {
    throw TruncationError("NIfTI voxel data needs " + std::to_string(count * width) +
                          " bytes after offset " + std::to_string(offset) + ", file has " +
                          std::to_string(bytes.size() > offset ? bytes.size() - offset : 0));
  }

  double slope = hdr->f32(kOffSclSlope);
  double inter = hdr->f32(kOffSclInter);
  const bool scaled = slope != 0.0 && std::isfinite(slope);
  if (!std::isfinite(inter)) inter = 0.0;

  Volume3D volume = Volume3D::zeros(nx, ny, nz, mm);
  const HeaderView data(bytes, hdr == &big ? std::endian::native == std::endian::little
                                           : std::endian::native == std::endian::big);
  double* out = volume.voxels.data();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = offset + i * width;
    double v = 0;
    switch (width) {
      case 1: v = bytes[at]; break;
      case 2: v = data.i16(at); break;
      case 4: v = data.f32(at); break;
      default: v = data.f64(at); break;
    }
    if (scaled) v = v * slope + inter;
    if (!std::isfinite(v)) throw FormatError("NIfTI voxel " + std::to_string(i) + " is not finite");
    out[i] = v;
  }
  return volume;
}

Volume3D read_nifti(const std::filesystem::path& path) { return parse_nifti(read_file(path)); }

std::vector<std::uint8_t> encode_nifti(const Volume3D& volume, bool gzip) {
  volume.validate();
  std::vector<std::uint8_t> header(kVoxOffset, 0);
  const auto put = [&header](std::size_t off, auto value) {
    std::memcpy(header.data() + off, &value, sizeof(value));
  };
  static_assert(std::endian::native == std::endian::little, "writer assumes a little-endian host");

  put(0, static_cast<std::int32_t>(kHeaderSize));
  const std::array<std::int16_t, 8> dim{3,
                                        static_cast<std::int16_t>(volume.nx()),
                                        static_cast<std::int16_t>(volume.ny()),
                                        static_cast<std::int16_t>(volume.nz()),
                                        1, 1, 1, 1};
  for (std::size_t i = 0; i < 8; ++i) put(kOffDim + 2 * i, dim[i]);
  put(kOffDatatype, static_cast<std::int16_t>(NiftiDatatype::Float32));
  put(kOffBitpix, static_cast<std::int16_t>(32));
  const std::array<float, 8> pixdim{1.0f,
                                    static_cast<float>(volume.voxel_mm[0]),
                                    static_cast<float>(volume.voxel_mm[1]),
                                    static_cast<float>(volume.voxel_mm[2]),
                                    1.0f, 1.0f, 1.0f, 1.0f};
  for (std::size_t i = 0; i < 8; ++i) put(kOffPixdim + 4 * i, pixdim[i]);
  put(kOffVoxOffset, static_cast<float>(kVoxOffset));
  put(kOffSclSlope, 0.0f);
  put(kOffSclInter, 0.0f);
  header[kOffXyztUnits] = 2;  // millimetres
  const std::string descrip = "subject " + std::to_string(volume.subject_id) + " " +
                              to_string(volume.label);
  std::memcpy(header.data() + kOffDescrip, descrip.data(), std::min<std::size_t>(descrip.size(), 79));
  std::memcpy(header.data() + kOffMagic, "n+1\0", 4);

  ByteWriter out;
  out.raw(header);
  for (double v : volume.voxels.values()) out.f32(static_cast<float>(v));
  if (!gzip) return std::move(out.bytes());
  return gzip_compress(out.bytes());
}

void write_nifti(const Volume3D& volume, const std::filesystem::path& path) {
  const bool gz = path.extension() == ".gz";
  write_file(path, encode_nifti(volume, gz));
}

}  // namespace adcnn
