#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "adcnn/dataset.hpp"
#include "adcnn/volume.hpp"

namespace adcnn {

struct BuildOptions {
  SliceOptions slices;
  /// Quantise with one intensity range per volume instead of per slice.
  bool per_volume_scaling = false;
  std::uint64_t seed = 0;
  std::string source_hash;  // recorded in the manifest
};

/// Resizes a slice to 28x28 and quantises it into a record.
SliceRecord make_record(const Slice2D& slice, std::optional<IntensityRange> range = std::nullopt);

/// Smooths every volume by `variant` mm (0 = none), extracts axial slices,
/// resizes and quantises them. Records follow volume order, then z order.
Dataset build_dataset(std::span<const Volume3D> volumes, int variant, const BuildOptions& options = {});

}  // namespace adcnn
