#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "adcnn/dataset.hpp"
#include "adcnn/lenet.hpp"
#include "adcnn/phantom.hpp"
#include "adcnn/sgd.hpp"
#include "adcnn/training.hpp"
#include "adcnn/volume.hpp"

namespace adcnn {

/// Every knob of an experiment. Text form is one `key = value` per line with
/// `#` comments; keys not listed by `serialize()` are rejected.
struct ExperimentConfig {
  std::size_t epochs = 30;
  std::size_t repeats = 5;
  std::size_t batch_size = 64;
  std::vector<int> variants{0, 2, 3, 4};
  bool balanced = false;
  std::uint64_t seed = 1;
  SgdConfig sgd;
  std::size_t hidden_width = 500;
  double test_fraction = 0.25;
  std::size_t balance_target = 0;  // 0: down-sample the majority to the minority count
  bool subject_level_split = false;
  std::string dataset_dir = "datasets";
  std::string out_dir = "runs";
  SliceOptions slices;
  bool per_volume_scaling = false;
  PhantomConfig phantom;

  /// Throws ConfigError.
  void validate() const;

  LayerSpec layer_spec() const { return LayerSpec::lenet5(hidden_width); }
  TrainOptions train_options(std::uint64_t run_seed) const;
  SplitMode split_mode() const {
    return subject_level_split ? SplitMode::SubjectLevel : SplitMode::SliceLevel;
  }

  /// Canonical text: every key, fixed order, round-trips through parse_config.
  std::string serialize() const;
  /// FNV-1a of serialize(), as 16 hex digits.
  std::string hash() const;
};

/// Starts from the defaults and applies each assignment. Throws ConfigError
/// on unknown keys, malformed values or a failed validate().
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies a single `key`/`value` assignment (used for CLI overrides too).
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

std::string hex64(std::uint64_t value);

}  // namespace adcnn
