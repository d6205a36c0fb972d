#include "adcnn/pipeline.hpp"

#include <algorithm>
#include <cstdio>

namespace adcnn {

SliceRecord make_record(const Slice2D& slice, std::optional<IntensityRange> range) {
  const Slice2D small = resize_bilinear(slice, kSliceSide, kSliceSide);
  const auto bytes = quantize_slice(small, range);
  SliceRecord r;
  r.label = static_cast<std::uint8_t>(slice.label);
  r.subject_id = slice.subject_id;
  r.axial_index = slice.axial_index;
  r.variant = slice.variant;
  std::copy(bytes.begin(), bytes.end(), r.pixels.begin());
  r.validate();
  return r;
}

Dataset build_dataset(std::span<const Volume3D> volumes, int variant, const BuildOptions& options) {
  if (!is_valid_variant(variant)) {
    throw ConfigError("smoothing variant must be one of 0, 2, 3, 4; got " + std::to_string(variant));
  }
  std::vector<SliceRecord> records;
  for (const Volume3D& source : volumes) {
    Volume3D v = variant == 0 ? source : gaussian_smooth3d(source, static_cast<double>(variant));
    v.variant = static_cast<std::uint8_t>(variant);
    const auto slices = extract_slices(v, options.slices);
    std::optional<IntensityRange> range;
    if (options.per_volume_scaling) range = intensity_range(v.voxels);
    for (const Slice2D& s : slices) records.push_back(make_record(s, range));
  }

  char eps[32];
  std::snprintf(eps, sizeof eps, "%.3g", options.slices.zero_mean_epsilon);
  Manifest m;
  m.set("variant", std::to_string(variant));
  m.set("smoothing.sigma_mm", std::to_string(variant));
  m.set("slices.drop_last", std::to_string(options.slices.drop_last));
  m.set("slices.drop_end", options.slices.drop_end == DropEnd::HighIndex ? "high" : "low");
  m.set("slices.zero_mean_epsilon", eps);
  m.set("slices.filter_order", "drop_then_filter");
  m.set("resize", "bilinear_half_pixel_28x28");
  m.set("quantization", options.per_volume_scaling ? "per_volume" : "per_slice");
  m.set("pixel_scale", "0.00390625");
  m.set("source.volumes", std::to_string(volumes.size()));
  m.set("source.hash", options.source_hash.empty() ? "-" : options.source_hash);
  m.set("creation.seed", std::to_string(options.seed));
  return Dataset(std::move(records), std::move(m));
}

}  // namespace adcnn
