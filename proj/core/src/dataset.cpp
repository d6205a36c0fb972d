#include "adcnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "adcnn/byte_io.hpp"
#include "adcnn/rng.hpp"

namespace adcnn {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'M', 'R', 'D'};
constexpr std::size_t kFixedHeader = 4 + 2 + 8 + 4;
constexpr std::array<int, 4> kVariants = {0, 2, 3, 4};

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

bool is_valid_variant(int variant) {
  return std::find(kVariants.begin(), kVariants.end(), variant) != kVariants.end();
}

void SliceRecord::validate() const {
  if (label > 1) throw FormatError("record label " + std::to_string(label) + " is not 0 or 1");
  if (!is_valid_variant(variant)) {
    throw FormatError("record variant " + std::to_string(variant) + " is not one of 0, 2, 3, 4");
  }
}

// ---- manifest --------------------------------------------------------------

void Manifest::set(const std::string& key, std::string value) {
  if (key.empty() || key.find_first_of("= \t\r\n") != std::string::npos) {
    throw ConfigError("invalid manifest key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) {
    throw ConfigError("manifest value for '" + key + "' contains a newline");
  }
  fields_[key] = std::move(value);
}

std::optional<std::string> Manifest::get(const std::string& key) const {
  auto it = fields_.find(key);
  if (it == fields_.end()) return std::nullopt;
  return it->second;
}

std::string Manifest::serialize() const {
  std::string out;
  for (const auto& [k, v] : fields_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

Manifest Manifest::parse(std::string_view text) {
  Manifest m;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("manifest line without '=': " + std::string(line));
    }
    m.set(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  return m;
}

// ---- dataset ---------------------------------------------------------------

Dataset::Dataset(std::vector<SliceRecord> records, Manifest manifest)
    : records_(std::move(records)), manifest_(std::move(manifest)) {
  for (const auto& r : records_) r.validate();
  refresh_counts();
}

std::size_t Dataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [label](const SliceRecord& r) { return r.label == label; }));
}

void Dataset::annotate(const std::string& key, std::string value) {
  if (key.starts_with("count.")) throw ConfigError("count.* manifest keys are derived from records");
  manifest_.set(key, std::move(value));
}

void Dataset::refresh_counts() {
  std::array<std::size_t, 5> per_variant{};
  std::size_t ad = 0;
  for (const auto& r : records_) {
    ad += r.label;
    ++per_variant[r.variant];
  }
  manifest_.set("count.total", records_.size());
  manifest_.set("count.ad", ad);
  manifest_.set("count.nc", records_.size() - ad);
  for (int v : kVariants) {
    manifest_.set("count.variant" + std::to_string(v), per_variant[static_cast<std::size_t>(v)]);
  }
}

void Dataset::check_counts() const {
  Dataset fresh(records_, {});
  for (const auto& [k, v] : fresh.manifest().fields()) {
    if (manifest_.get(k) != v) {
      throw CorruptionError("manifest " + k + "=" + manifest_.get(k).value_or("<missing>") +
                            " but records give " + v);
    }
  }
}

// ---- file format -----------------------------------------------------------

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset) {
  dataset.check_counts();
  const std::string manifest = dataset.manifest().serialize();
  ByteWriter out;
  out.bytes().reserve(kFixedHeader + manifest.size() + dataset.size() * kRecordBytes + 8);
  out.raw(kMagic);
  out.u16(kDatasetVersion);
  out.u64(dataset.size());
  out.u32(static_cast<std::uint32_t>(manifest.size()));
  out.raw(manifest);
  for (const auto& r : dataset.records()) {
    out.u8(r.label);
    out.u32(r.subject_id);
    out.u16(r.axial_index);
    out.u8(r.variant);
    out.raw(r.pixels);
  }
  out.u64(fnv1a64(out.bytes()));
  return std::move(out.bytes());
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const auto magic = in.raw(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("not a slice dataset: bad magic");
  }
  const std::uint16_t version = in.u16();
  if (version != kDatasetVersion) {
    throw VersionError("unsupported dataset version " + std::to_string(version));
  }
  const std::uint64_t count = in.u64();
  const std::uint32_t manifest_len = in.u32();

  const std::uint64_t payload = static_cast<std::uint64_t>(kRecordBytes) * count;
  if (count > bytes.size() / kRecordBytes) {
    throw TruncationError("header claims " + std::to_string(count) + " records, file has " +
                          std::to_string(bytes.size()) + " bytes");
  }
  const std::uint64_t expected = kFixedHeader + manifest_len + payload + 8;
  if (bytes.size() < expected) {
    throw TruncationError("dataset file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw CorruptionError("dataset file has " + std::to_string(bytes.size() - expected) +
                          " unexpected trailing bytes");
  }

  const std::uint64_t stored = ByteReader(bytes.subspan(bytes.size() - 8)).u64();
  if (fnv1a64(bytes.first(bytes.size() - 8)) != stored) {
    throw CorruptionError("dataset checksum mismatch");
  }

  const auto manifest_bytes = in.raw(manifest_len);
  Manifest manifest = Manifest::parse(
      std::string_view(reinterpret_cast<const char*>(manifest_bytes.data()), manifest_bytes.size()));

  std::vector<SliceRecord> records(count);
  for (auto& r : records) {
    r.label = in.u8();
    r.subject_id = in.u32();
    r.axial_index = in.u16();
    r.variant = in.u8();
    const auto px = in.raw(kSlicePixels);
    std::copy(px.begin(), px.end(), r.pixels.begin());
    try {
      r.validate();
    } catch (const FormatError& e) {
      throw CorruptionError(e.what());
    }
  }

  // Rebuild through the constructor, then confirm the stored counts agree.
  Manifest without_counts;
  for (const auto& [k, v] : manifest.fields()) {
    if (!k.starts_with("count.")) without_counts.set(k, v);
  }
  Dataset dataset(std::move(records), std::move(without_counts));
  for (const auto& [k, v] : dataset.manifest().fields()) {
    if (k.starts_with("count.") && manifest.get(k) != v) {
      throw CorruptionError("manifest " + k + " disagrees with the stored records");
    }
  }
  return dataset;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  if (dataset.empty()) throw StateError("refusing to write an empty dataset");
  write_file(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

// ---- split / balance -------------------------------------------------------

namespace {

Dataset subset(const Dataset& source, const std::vector<bool>& take) {
  std::vector<SliceRecord> records;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (take[i]) records.push_back(source.records()[i]);
  }
  Manifest m;
  for (const auto& [k, v] : source.manifest().fields()) {
    if (!k.starts_with("count.")) m.set(k, v);
  }
  return Dataset(std::move(records), std::move(m));
}

}  // namespace

SplitResult split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                          SplitMode mode) {
  if (dataset.empty()) throw StateError("cannot split an empty dataset");
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw ConfigError("test fraction must lie strictly between 0 and 1");
  }
  if (dataset.manifest().contains("split")) throw StateError("dataset is already a split half");

  Rng rng(seed);
  std::vector<bool> in_test(dataset.size(), false);
  if (mode == SplitMode::SliceLevel) {
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span(order));
    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(dataset.size()) * test_fraction));
    for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;
  } else {
    std::vector<std::uint32_t> subjects;
    std::set<std::uint32_t> seen;
    for (const auto& r : dataset.records()) {
      if (seen.insert(r.subject_id).second) subjects.push_back(r.subject_id);
    }
    rng.shuffle(std::span(subjects));
    const auto n_test = static_cast<std::size_t>(
        std::floor(static_cast<double>(subjects.size()) * test_fraction));
    const std::set<std::uint32_t> test_subjects(subjects.begin(),
                                                subjects.begin() + static_cast<std::ptrdiff_t>(n_test));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      in_test[i] = test_subjects.contains(dataset.records()[i].subject_id);
    }
  }

  std::vector<bool> in_train(in_test.size());
  for (std::size_t i = 0; i < in_test.size(); ++i) in_train[i] = !in_test[i];
  SplitResult out{subset(dataset, in_train), subset(dataset, in_test)};

  const std::string order =
      dataset.manifest().get("balance.target") ? "balance,split" : "split";
  for (Dataset* half : {&out.train, &out.test}) {
    half->annotate("split", half == &out.train ? "train" : "test");
    half->annotate("split.seed", std::to_string(seed));
    half->annotate("split.test_fraction", format_fraction(test_fraction));
    half->annotate("split.mode", mode == SplitMode::SliceLevel ? "slice" : "subject");
    half->annotate("pipeline.order", order);
  }
  return out;
}

Dataset balance_dataset(const Dataset& dataset, std::size_t majority_target, std::uint64_t seed) {
  if (dataset.manifest().contains("split")) {
    throw StateError("balance_dataset must run before split_dataset");
  }
  const std::size_t ad = dataset.count_label(1);
  const std::size_t nc = dataset.count_label(0);
  const std::uint8_t majority = ad >= nc ? 1 : 0;
  const std::size_t available = std::max(ad, nc);
  if (majority_target > available) {
    throw ConfigError("balance target " + std::to_string(majority_target) +
                      " exceeds the majority class count " + std::to_string(available));
  }

  std::vector<std::size_t> majority_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.records()[i].label == majority) majority_idx.push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(std::span(majority_idx));

  std::vector<bool> keep(dataset.size(), true);
  for (std::size_t k = majority_target; k < majority_idx.size(); ++k) keep[majority_idx[k]] = false;

  Dataset out = subset(dataset, keep);
  out.annotate("balance.target", std::to_string(majority_target));
  out.annotate("balance.seed", std::to_string(seed));
  out.annotate("balance.majority", majority == 1 ? "AD" : "NC");
  return out;
}

// ---- batches ---------------------------------------------------------------

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> indices) {
  Batch batch;
  batch.pixels = Tensor(Shape{std::max<std::size_t>(indices.size(), 1), 1, kSliceSide, kSliceSide});
  batch.labels.reserve(indices.size());
  batch.subject_ids.reserve(indices.size());
  float* dst = batch.pixels.data();
  for (std::size_t idx : indices) {
    const SliceRecord& r = dataset.records().at(idx);
    for (std::uint8_t px : r.pixels) *dst++ = static_cast<float>(px) * kPixelScale;
    batch.labels.push_back(r.label);
    batch.subject_ids.push_back(r.subject_id);
  }
  return batch;
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t epoch_seed)
    : BatchIterator(dataset, batch_size) {
  Rng rng(epoch_seed);
  rng.shuffle(std::span(order_));
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size)
    : dataset_(&dataset), batch_size_(batch_size), order_(dataset.size()) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
  Batch b = make_batch(*dataset_, std::span(order_).subspan(cursor_, n));
  cursor_ += n;
  return b;
}

std::size_t BatchIterator::batches_remaining() const {
  return (order_.size() - cursor_ + batch_size_ - 1) / batch_size_;
}

}  // namespace adcnn
