#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "adcnn/volume.hpp"

namespace adcnn {

/// Synthetic stand-in for grey-matter volumes: an ellipsoidal head with a
/// brighter rim, an inner ellipsoidal structure whose in-plane radii shrink
/// by `effect_size` for AD subjects, and Gaussian noise inside the head.
struct PhantomConfig {
  std::size_t subjects_ad = 33;
  std::size_t subjects_nc = 7;
  std::size_t nx = 32;
  std::size_t ny = 32;
  std::size_t nz = 32;
  double voxel_mm = 2.0;
  double effect_size = 0.3;  // fractional in-plane radius reduction for AD
  double noise_sigma = 0.05;
  double jitter = 0.05;      // relative per-subject size variation
  std::uint64_t seed = 1;

  void validate() const;
};

struct Ellipsoid {
  std::array<double, 3> centre{};  // voxel coordinates (x, y, z)
  std::array<double, 3> radii{};   // semi-axes in voxels

  /// Normalised radius: <= 1 inside.
  double rho(double x, double y, double z) const;
  bool contains(double x, double y, double z) const { return rho(x, y, z) <= 1.0; }
};

struct PhantomGeometry {
  Ellipsoid head;
  Ellipsoid inner;
  ClassLabel label = ClassLabel::NC;
  std::uint32_t subject_id = 0;
};

inline constexpr double kPhantomRimStart = 0.85;  // normalised head radius
inline constexpr double kPhantomRimIntensity = 0.8;
inline constexpr double kPhantomTissueIntensity = 0.45;
inline constexpr double kPhantomInnerIntensity = 1.0;

/// Geometry of subject `index` (NC subjects come first). Deterministic in the seed.
PhantomGeometry phantom_geometry(const PhantomConfig& config, std::size_t index);

/// Noise-free intensity at a voxel.
double phantom_intensity(const PhantomGeometry& geometry, double x, double y, double z);

/// subjects_nc + subjects_ad volumes, subject ids 1..N in that order.
std::vector<Volume3D> generate_phantoms(const PhantomConfig& config);

}  // namespace adcnn
