#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adcnn/config.hpp"

namespace adcnn {

struct RunOutcome {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  double accuracy = 0;
  double subject_accuracy = 0;
  double test_loss = 0;
  std::size_t train_records = 0;
  std::size_t test_records = 0;
};

struct ReportRow {
  std::string label;  // "Structural MRI 3", "B. Structural MRI 3"
  int variant = 0;
  bool balanced = false;
  std::vector<RunOutcome> runs;
  double mean_accuracy = 0;
  double mean_subject_accuracy = 0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::string text;
};

/// Published accuracies for a row, as printed in the source table.
struct ReferenceAccuracy {
  std::string lenet;
  std::string googlenet;  // empty where none was published
};
std::optional<ReferenceAccuracy> reference_accuracy(int variant, bool balanced);

std::string row_label(int variant, bool balanced);
std::filesystem::path dataset_path(const std::filesystem::path& dir, int variant);

/// Plain arithmetic mean; 0 for an empty list.
double mean_of(std::span<const double> values);

using ProgressCallback = std::function<void(const std::string&)>;

/// For each variant (and again balanced when config.balanced), runs
/// config.repeats trainings with seeds seed + run_index. Each run balances
/// (if requested), splits, trains and evaluates. Writes
/// out_dir/report.txt, out_dir/config.txt and per-run metrics CSVs and
/// checkpoints. Throws IoError naming every variant whose dataset is missing.
ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressCallback& progress = {});

/// Deterministic text rendering of the rows; contains no timings.
std::string format_report(const ExperimentConfig& config, std::span<const ReportRow> rows);

}  // namespace adcnn
