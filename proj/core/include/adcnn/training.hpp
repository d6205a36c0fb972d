#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "adcnn/dataset.hpp"
#include "adcnn/lenet.hpp"
#include "adcnn/sgd.hpp"

namespace adcnn {

struct TrainOptions {
  LayerSpec spec = LayerSpec::lenet5();
  SgdConfig sgd;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double test_accuracy = 0;
  double test_loss = 0;
  double train_loss = 0;
  double lr = 0;       // lr_at(iterations completed by the end of this epoch)
  double seconds = 0;  // wall clock; never written to CSV
};

struct MetricsHistory {
  std::vector<EpochMetrics> epochs;

  double final_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().test_accuracy; }
};

struct Evaluation {
  double accuracy = 0;
  double mean_loss = 0;
  /// Majority vote over each subject's slices (ties go to NC).
  double subject_accuracy = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct TrainResult {
  NetworkParams<float> params;
  MetricsHistory history;
  Evaluation final_evaluation;
  std::uint64_t iterations = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch momentum SGD; evaluates on `test_set` after every epoch. The
/// iteration counter driving the learning-rate schedule runs across epochs.
/// Throws NumericError if a batch loss becomes non-finite.
TrainResult train(const TrainOptions& options, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch = {});

/// Slice-level accuracy and mean cross-entropy; does not touch `params`.
Evaluation evaluate(const NetworkParams<float>& params, const Dataset& dataset,
                    std::size_t batch_size = 256);

/// "epoch,test_accuracy,test_loss,train_loss,lr" then one row per epoch,
/// six fractional digits.
std::string format_metrics_csv(const MetricsHistory& history);
void report_metrics(const MetricsHistory& history, const std::filesystem::path& path);
MetricsHistory parse_metrics_csv(std::string_view text);

}  // namespace adcnn
