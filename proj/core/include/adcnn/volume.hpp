#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adcnn/tensor.hpp"

namespace adcnn {

enum class ClassLabel : std::uint8_t { NC = 0, AD = 1 };

std::string to_string(ClassLabel label);
/// Accepts "AD"/"NC" (any case) or "1"/"0".
ClassLabel parse_label(std::string_view text);

/// Scalar voxel grid. `voxels` is stored [Z, Y, X] so that x varies fastest,
/// which is the on-disk NIfTI order and makes axial slices contiguous.
struct Volume3D {
  TensorD voxels;
  std::array<double, 3> voxel_mm{1.0, 1.0, 1.0};  // dx, dy, dz
  std::uint32_t subject_id = 0;
  ClassLabel label = ClassLabel::NC;
  std::uint8_t variant = 0;  // smoothing sigma in mm, 0 = unsmoothed

  static Volume3D zeros(std::size_t nx, std::size_t ny, std::size_t nz,
                        std::array<double, 3> voxel_mm = {1.0, 1.0, 1.0});

  std::size_t nx() const { return voxels.dim(2); }
  std::size_t ny() const { return voxels.dim(1); }
  std::size_t nz() const { return voxels.dim(0); }

  double& at(std::size_t x, std::size_t y, std::size_t z) { return voxels.at(z, y, x); }
  double at(std::size_t x, std::size_t y, std::size_t z) const { return voxels.at(z, y, x); }

  /// Throws DimensionError unless dims and voxel sizes are positive.
  void validate() const;
};

/// Axial cross-section, pixels [H = ny, W = nx].
struct Slice2D {
  TensorD pixels;
  std::uint32_t subject_id = 0;
  std::uint16_t axial_index = 0;
  std::uint8_t variant = 0;
  ClassLabel label = ClassLabel::NC;
};

// ---- NIfTI-1 ---------------------------------------------------------------

enum class NiftiDatatype : std::int16_t { UInt8 = 2, Int16 = 4, Float32 = 16, Float64 = 64 };

/// Parses a single-file NIfTI-1 image (".nii", or gzip-compressed ".nii.gz").
/// Either byte order is accepted. Voxels are rescaled by scl_slope/scl_inter
/// when scl_slope is non-zero.
///
/// Errors: FormatError for bad magic or an unreadable header,
/// UnsupportedError for datatypes other than u8/i16/f32/f64 or non-3D data,
/// TruncationError when the voxel block extends past the end of the data.
Volume3D parse_nifti(std::span<const std::uint8_t> bytes);
Volume3D read_nifti(const std::filesystem::path& path);

/// Little-endian float32 NIfTI-1 with a 352-byte voxel offset.
std::vector<std::uint8_t> encode_nifti(const Volume3D& volume, bool gzip = false);
void write_nifti(const Volume3D& volume, const std::filesystem::path& path);

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> bytes);

// ---- smoothing -------------------------------------------------------------

/// Normalised 1-D Gaussian taps for offsets -r..r with r = ceil(4 sigma).
std::vector<double> gaussian_taps(double sigma_vox);

/// Separable Gaussian blur with the physical `sigma_mm` converted per axis
/// using that axis' voxel size. Taps falling outside the volume are dropped
/// and the remaining weights renormalised.
Volume3D gaussian_smooth3d(const Volume3D& volume, double sigma_mm);

/// FWHM = 2 sqrt(2 ln 2) sigma.
constexpr double kFwhmPerSigma = 2.3548200450309493;

// ---- slicing ---------------------------------------------------------------

enum class DropEnd : std::uint8_t { HighIndex, LowIndex };

struct SliceOptions {
  std::size_t drop_last = 10;
  DropEnd drop_end = DropEnd::HighIndex;
  double zero_mean_epsilon = 1e-12;
};

/// Axial slices in increasing z. The `drop_last` slices at `drop_end` are
/// removed first, then every slice whose |mean| <= zero_mean_epsilon.
/// Throws DimensionError when nz <= drop_last.
std::vector<Slice2D> extract_slices(const Volume3D& volume, const SliceOptions& options = {});

/// Half-pixel-centre bilinear resampling. Input must be at least 2x2.
Slice2D resize_bilinear(const Slice2D& slice, std::size_t out_h = 28, std::size_t out_w = 28);

struct IntensityRange {
  double lo = 0;
  double hi = 0;
};

/// Affine map of [lo, hi] onto 0..255 with round-half-up. By default the
/// range is the slice's own min/max; a constant slice maps to all zeros.
/// Values outside an explicit range are clamped.
std::vector<std::uint8_t> quantize_slice(const Slice2D& slice,
                                         std::optional<IntensityRange> range = std::nullopt);

IntensityRange intensity_range(const TensorD& values);

}  // namespace adcnn
