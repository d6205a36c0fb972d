#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adcnn/tensor.hpp"

namespace adcnn {

inline constexpr std::size_t kSliceSide = 28;
inline constexpr std::size_t kSlicePixels = kSliceSide * kSliceSide;
inline constexpr std::size_t kRecordBytes = 1 + 4 + 2 + 1 + kSlicePixels;  // 792
inline constexpr std::uint16_t kDatasetVersion = 1;
/// Multiplier applied to 8-bit pixels when batches are materialised.
inline constexpr float kPixelScale = 0.00390625f;  // 1/256

/// One labelled 28x28 8-bit slice.
struct SliceRecord {
  std::uint8_t label = 0;  // 0 = NC, 1 = AD
  std::uint32_t subject_id = 0;
  std::uint16_t axial_index = 0;
  std::uint8_t variant = 0;  // 0, 2, 3 or 4
  std::array<std::uint8_t, kSlicePixels> pixels{};

  /// Throws FormatError on out-of-range label or variant.
  void validate() const;

  friend bool operator==(const SliceRecord&, const SliceRecord&) = default;
};

bool is_valid_variant(int variant);

/// Ordered key=value metadata. Serialised one `key=value` line per entry in
/// key order, so the byte form is deterministic.
class Manifest {
 public:
  void set(const std::string& key, std::string value);
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return fields_.contains(key); }
  void erase(const std::string& key) { fields_.erase(key); }
  const std::map<std::string, std::string>& fields() const noexcept { return fields_; }

  std::string serialize() const;
  static Manifest parse(std::string_view text);

  friend bool operator==(const Manifest&, const Manifest&) = default;

 private:
  std::map<std::string, std::string> fields_;
};

/// Record list plus manifest. The `count.*` manifest keys are owned by the
/// dataset and always reflect the records.
class Dataset {
 public:
  Dataset() { refresh_counts(); }
  explicit Dataset(std::vector<SliceRecord> records, Manifest manifest = {});

  const std::vector<SliceRecord>& records() const noexcept { return records_; }
  const Manifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t count_label(std::uint8_t label) const;

  /// Sets a non-count manifest key. `count.*` keys are rejected.
  void annotate(const std::string& key, std::string value);

  /// Throws CorruptionError if the manifest counts disagree with the records.
  void check_counts() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void refresh_counts();

  std::vector<SliceRecord> records_;
  Manifest manifest_;
};

// File layout (little-endian): "SMRD", u16 version, u64 record count,
// u32 manifest length, manifest bytes, packed 792-byte records, then a u64
// FNV-1a checksum over every preceding byte.
std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

enum class SplitMode : std::uint8_t { SliceLevel, SubjectLevel };

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Seeded shuffle of the record indices; the first floor(n * test_fraction)
/// go to test. In subject mode whole subjects are shuffled and assigned to
/// test until floor(subjects * test_fraction) subjects are taken. Both halves
/// keep the original relative record order.
SplitResult split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                          SplitMode mode = SplitMode::SliceLevel);

/// Down-samples the larger class to `majority_target` records without
/// replacement. Must run before split_dataset (StateError otherwise).
Dataset balance_dataset(const Dataset& dataset, std::size_t majority_target, std::uint64_t seed);

struct Batch {
  Tensor pixels;                    // [B, 1, 28, 28], scaled by kPixelScale
  std::vector<std::size_t> labels;  // class indices
  std::vector<std::uint32_t> subject_ids;
};

/// One epoch of shuffled mini-batches; the final batch may be short.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t epoch_seed);
  /// Unshuffled, in record order.
  BatchIterator(const Dataset& dataset, std::size_t batch_size);

  std::optional<Batch> next();
  std::size_t batches_remaining() const;

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Materialises the records at `indices`, in that order.
Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace adcnn
