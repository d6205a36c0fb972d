#include "adcnn/phantom.hpp"

#include <cmath>

#include "adcnn/rng.hpp"

namespace adcnn {

void PhantomConfig::validate() const {
  if (nx < 4 || ny < 4 || nz < 4) throw ConfigError("phantom volumes need at least 4 voxels per axis");
  if (subjects_ad + subjects_nc == 0) throw ConfigError("phantom set needs at least one subject");
  if (!(voxel_mm > 0)) throw ConfigError("phantom voxel size must be positive");
  if (!(effect_size > 0 && effect_size < 1)) throw ConfigError("effect size must lie in (0, 1)");
  if (!(noise_sigma >= 0)) throw ConfigError("noise sigma must be >= 0");
  if (!(jitter >= 0 && jitter < 0.2)) throw ConfigError("jitter must lie in [0, 0.2)");
}

double Ellipsoid::rho(double x, double y, double z) const {
  const double dx = (x - centre[0]) / radii[0];
  const double dy = (y - centre[1]) / radii[1];
  const double dz = (z - centre[2]) / radii[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

PhantomGeometry phantom_geometry(const PhantomConfig& config, std::size_t index) {
  config.validate();
  Rng rng(derive_seed(config.seed, 2 * index));
  const auto wobble = [&](double scale) { return 1.0 + scale * rng.uniform(-1.0, 1.0); };

  PhantomGeometry g;
  g.subject_id = static_cast<std::uint32_t>(index + 1);
  g.label = index < config.subjects_nc ? ClassLabel::NC : ClassLabel::AD;

  const std::array<double, 3> mid{(static_cast<double>(config.nx) - 1) / 2,
                                  (static_cast<double>(config.ny) - 1) / 2,
                                  (static_cast<double>(config.nz) - 1) / 2};
  // The head's z semi-axis exceeds half the volume so that every axial
  // slice cuts through both the head and the inner structure.
  const double head_scale = wobble(config.jitter);
  g.head.centre = {mid[0] + 10 * config.jitter * rng.uniform(-1.0, 1.0),
                   mid[1] + 10 * config.jitter * rng.uniform(-1.0, 1.0), mid[2]};
  g.head.radii = {0.42 * static_cast<double>(config.nx) * head_scale,
                  0.46 * static_cast<double>(config.ny) * head_scale,
                  0.75 * static_cast<double>(config.nz)};

  const double inner_scale = wobble(config.jitter);
  const double atrophy = g.label == ClassLabel::AD ? 1.0 - config.effect_size : 1.0;
  g.inner.centre = g.head.centre;
  g.inner.radii = {0.45 * g.head.radii[0] * inner_scale * atrophy,
                   0.45 * g.head.radii[1] * inner_scale * atrophy, 0.9 * g.head.radii[2]};
  return g;
}

double phantom_intensity(const PhantomGeometry& g, double x, double y, double z) {
  const double rho = g.head.rho(x, y, z);
  if (rho > 1.0) return 0.0;
  if (g.inner.contains(x, y, z)) return kPhantomInnerIntensity;
  return rho > kPhantomRimStart ? kPhantomRimIntensity : kPhantomTissueIntensity;
}

std::vector<Volume3D> generate_phantoms(const PhantomConfig& config) {
  config.validate();
  const std::size_t n = config.subjects_nc + config.subjects_ad;
  std::vector<Volume3D> volumes;
  volumes.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const PhantomGeometry g = phantom_geometry(config, s);
    Rng noise(derive_seed(config.seed, 2 * s + 1));
    Volume3D v = Volume3D::zeros(config.nx, config.ny, config.nz,
                                 {config.voxel_mm, config.voxel_mm, config.voxel_mm});
    v.subject_id = g.subject_id;
    v.label = g.label;
    for (std::size_t z = 0; z < config.nz; ++z) {
      for (std::size_t y = 0; y < config.ny; ++y) {
        for (std::size_t x = 0; x < config.nx; ++x) {
          const auto fx = static_cast<double>(x), fy = static_cast<double>(y),
                     fz = static_cast<double>(z);
          double value = phantom_intensity(g, fx, fy, fz);
          if (value != 0.0 && config.noise_sigma > 0) value += config.noise_sigma * noise.normal();
          v.at(x, y, z) = value;
        }
      }
    }
    volumes.push_back(std::move(v));
  }
  return volumes;
}

}  // namespace adcnn
