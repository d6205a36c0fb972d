#include <algorithm>
#include <cctype>
#include <cmath>

#include "adcnn/volume.hpp"

namespace adcnn {

std::string to_string(ClassLabel label) { return label == ClassLabel::AD ? "AD" : "NC"; }

ClassLabel parse_label(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "AD" || upper == "1") return ClassLabel::AD;
  if (upper == "NC" || upper == "CN" || upper == "0") return ClassLabel::NC;
  throw FormatError("unknown class label '" + std::string(text) + "'");
}

Volume3D Volume3D::zeros(std::size_t nx, std::size_t ny, std::size_t nz,
                         std::array<double, 3> voxel_mm) {
  Volume3D v;
  v.voxels = TensorD(Shape{nz, ny, nx});
  v.voxel_mm = voxel_mm;
  v.validate();
  return v;
}

void Volume3D::validate() const {
  if (voxels.rank() != 3) {
    throw DimensionError("volume voxels must be rank 3, got " + shape_string(voxels.shape()));
  }
  for (double mm : voxel_mm) {
    if (!(mm > 0) || !std::isfinite(mm)) throw DimensionError("voxel sizes must be positive");
  }
}

// ---- smoothing -------------------------------------------------------------

std::vector<double> gaussian_taps(double sigma_vox) {
  if (!(sigma_vox > 0) || !std::isfinite(sigma_vox)) {
    throw ConfigError("Gaussian sigma must be positive");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_vox));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k);
    const double w = std::exp(-0.5 * x * x / (sigma_vox * sigma_vox));
    taps[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

namespace {

/// Blurs every line along one axis. `stride` is the element step along the
/// axis, `length` its extent; `lines` enumerates the starting offsets.
void blur_axis(std::vector<double>& data, const std::vector<std::size_t>& line_starts,
               std::size_t stride, std::size_t length, const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(length);
  std::vector<double> line(length), out(length);
  for (std::size_t start : line_starts) {
    for (std::size_t i = 0; i < length; ++i) line[i] = data[start + i * stride];
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-radius, -i);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(radius, n - 1 - i);
      double acc = 0, mass = 0;
      for (std::ptrdiff_t k = lo; k <= hi; ++k) {
        const double w = taps[static_cast<std::size_t>(k + radius)];
        acc += w * line[static_cast<std::size_t>(i + k)];
        mass += w;
      }
      out[static_cast<std::size_t>(i)] = acc / mass;
    }
    for (std::size_t i = 0; i < length; ++i) data[start + i * stride] = out[i];
  }
}

}  // namespace

Volume3D gaussian_smooth3d(const Volume3D& volume, double sigma_mm) {
  volume.validate();
  if (!(sigma_mm > 0) || !std::isfinite(sigma_mm)) {
    throw ConfigError("smoothing sigma must be positive, got " + std::to_string(sigma_mm) + " mm");
  }
  Volume3D out = volume;
  const std::size_t nx = volume.nx(), ny = volume.ny(), nz = volume.nz();
  std::vector<double> data(volume.voxels.values().begin(), volume.voxels.values().end());

  std::vector<std::size_t> starts;
  // x lines
  starts.clear();
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y) starts.push_back((z * ny + y) * nx);
  blur_axis(data, starts, 1, nx, gaussian_taps(sigma_mm / volume.voxel_mm[0]));
  // y lines
  starts.clear();
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t x = 0; x < nx; ++x) starts.push_back(z * ny * nx + x);
  blur_axis(data, starts, nx, ny, gaussian_taps(sigma_mm / volume.voxel_mm[1]));
  // z lines
  starts.clear();
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) starts.push_back(y * nx + x);
  blur_axis(data, starts, nx * ny, nz, gaussian_taps(sigma_mm / volume.voxel_mm[2]));

  out.voxels = TensorD(volume.voxels.shape(), std::move(data));
  return out;
}

// ---- slicing ---------------------------------------------------------------

std::vector<Slice2D> extract_slices(const Volume3D& volume, const SliceOptions& options) {
  volume.validate();
  const std::size_t nx = volume.nx(), ny = volume.ny(), nz = volume.nz();
  if (nz <= options.drop_last) {
    throw DimensionError("volume has " + std::to_string(nz) + " axial slices; dropping " +
                         std::to_string(options.drop_last) + " leaves none");
  }
  const std::size_t first = options.drop_end == DropEnd::LowIndex ? options.drop_last : 0;
  const std::size_t last = options.drop_end == DropEnd::LowIndex ? nz : nz - options.drop_last;

  std::vector<Slice2D> slices;
  for (std::size_t z = first; z < last; ++z) {
    const double* src = volume.voxels.data() + z * ny * nx;
    std::vector<double> pixels(src, src + ny * nx);
    double sum = 0;
    for (double v : pixels) sum += v;
    const double mean = sum / static_cast<double>(pixels.size());
    if (std::fabs(mean) <= options.zero_mean_epsilon) continue;

    Slice2D s;
    s.pixels = TensorD(Shape{ny, nx}, std::move(pixels));
    s.subject_id = volume.subject_id;
    s.axial_index = static_cast<std::uint16_t>(z);
    s.variant = volume.variant;
    s.label = volume.label;
    slices.push_back(std::move(s));
  }
  return slices;
}

Slice2D resize_bilinear(const Slice2D& slice, std::size_t out_h, std::size_t out_w) {
  if (slice.pixels.rank() != 2 || slice.pixels.dim(0) < 2 || slice.pixels.dim(1) < 2) {
    throw DimensionError("bilinear resize needs an input of at least 2x2, got " +
                         shape_string(slice.pixels.shape()));
  }
  if (out_h == 0 || out_w == 0) throw DimensionError("bilinear resize target must be non-empty");
  const std::size_t in_h = slice.pixels.dim(0), in_w = slice.pixels.dim(1);

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  const auto taps_for = [](std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
      double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      taps[d] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return taps;
  };
  const auto rows = taps_for(in_h, out_h);
  const auto cols = taps_for(in_w, out_w);

  Slice2D out = slice;
  out.pixels = TensorD(Shape{out_h, out_w});
  const TensorD& p = slice.pixels;
  for (std::size_t i = 0; i < out_h; ++i) {
    const Tap& r = rows[i];
    for (std::size_t j = 0; j < out_w; ++j) {
      const Tap& c = cols[j];
      const double top = p.at(r.lo, c.lo) * (1.0 - c.frac) + p.at(r.lo, c.hi) * c.frac;
      const double bottom = p.at(r.hi, c.lo) * (1.0 - c.frac) + p.at(r.hi, c.hi) * c.frac;
      out.pixels.at(i, j) = top * (1.0 - r.frac) + bottom * r.frac;
    }
  }
  return out;
}

IntensityRange intensity_range(const TensorD& values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.values().begin(), values.values().end());
  return {*lo, *hi};
}

std::vector<std::uint8_t> quantize_slice(const Slice2D& slice, std::optional<IntensityRange> range) {
  const IntensityRange r = range.value_or(intensity_range(slice.pixels));
  std::vector<std::uint8_t> out(slice.pixels.size(), 0);
  const double span = r.hi - r.lo;
  if (!(span > 0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double unit = std::clamp((slice.pixels[i] - r.lo) / span, 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::floor(unit * 255.0 + 0.5));
  }
  return out;
}

}  // namespace adcnn
