#include "adcnn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "adcnn/byte_io.hpp"
#include "adcnn/rng.hpp"

namespace adcnn {

namespace {

// Seed streams derived from TrainOptions::seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpochStreamBase = 1000;

void require_disjoint(const Dataset& a, const Dataset& b) {
  using Key = std::tuple<std::uint32_t, std::uint16_t, std::uint8_t>;
  std::set<Key> keys;
  for (const auto& r : a.records()) keys.emplace(r.subject_id, r.axial_index, r.variant);
  for (const auto& r : b.records()) {
    if (keys.contains(Key{r.subject_id, r.axial_index, r.variant})) {
      throw StateError("train and test sets share subject " + std::to_string(r.subject_id) +
                       " slice " + std::to_string(r.axial_index));
    }
  }
}

bool all_finite(const NetworkParams<float>& params) {
  for (const auto& layer : params.layers) {
    for (float w : layer.weights.values())
      if (!std::isfinite(w)) return false;
    for (float b : layer.bias.values())
      if (!std::isfinite(b)) return false;
  }
  return true;
}

}  // namespace

Evaluation evaluate(const NetworkParams<float>& params, const Dataset& dataset,
                    std::size_t batch_size) {
  if (dataset.empty()) throw StateError("cannot evaluate on an empty dataset");
  Evaluation eval;
  double loss_sum = 0;
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> votes;  // subject -> (NC, AD)
  std::map<std::uint32_t, std::size_t> subject_label;

  BatchIterator batches(dataset, batch_size);
  const std::size_t classes = params.spec.num_classes();
  while (auto batch = batches.next()) {
    const Tensor logits = infer_logits(params, batch->pixels);
    for (std::size_t b = 0; b < batch->labels.size(); ++b) {
      Tensor row(Shape{classes});
      for (std::size_t k = 0; k < classes; ++k) row[k] = logits.at(b, k);
      const LossGrad<float> lg = softmax_cross_entropy(row, batch->labels[b]);
      loss_sum += lg.loss;
      std::size_t predicted = 0;
      for (std::size_t k = 1; k < classes; ++k) {
        if (lg.probabilities[k] > lg.probabilities[predicted]) predicted = k;
      }
      if (predicted == batch->labels[b]) ++eval.correct;
      ++eval.total;
      auto& v = votes[batch->subject_ids[b]];
      (predicted == 1 ? v.second : v.first) += 1;
      subject_label[batch->subject_ids[b]] = batch->labels[b];
    }
  }
  eval.accuracy = static_cast<double>(eval.correct) / static_cast<double>(eval.total);
  eval.mean_loss = loss_sum / static_cast<double>(eval.total);

  std::size_t subjects_right = 0;
  for (const auto& [subject, v] : votes) {
    const std::size_t majority = v.second > v.first ? 1 : 0;
    if (majority == subject_label[subject]) ++subjects_right;
  }
  eval.subject_accuracy = static_cast<double>(subjects_right) / static_cast<double>(votes.size());
  return eval;
}

TrainResult train(const TrainOptions& options, const Dataset& train_set, const Dataset& test_set,
                  const EpochCallback& on_epoch) {
  if (train_set.empty() || test_set.empty()) {
    throw StateError("training needs non-empty train and test sets");
  }
  if (options.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (options.batch_size == 0) throw ConfigError("batch size must be >= 1");
  options.sgd.validate();
  require_disjoint(train_set, test_set);

  TrainResult result;
  result.params = init_params<float>(options.spec, derive_seed(options.seed, kInitStream));
  Velocity<float> velocity = zeros_like(result.params);
  std::uint64_t iteration = 0;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    BatchIterator batches(train_set, options.batch_size,
                          derive_seed(options.seed, kEpochStreamBase + epoch));
    double loss_sum = 0;
    std::size_t seen = 0;
    while (auto batch = batches.next()) {
      const ForwardResult<float> fwd = forward(result.params, batch->pixels);
      const BackwardResult<float> bwd = backward(result.params, fwd, batch->labels);
      if (!std::isfinite(bwd.mean_loss)) {
        throw NumericError("non-finite training loss at iteration " + std::to_string(iteration));
      }
      sgd_step(result.params, bwd.gradients, velocity, options.sgd, iteration);
      if (!all_finite(result.params)) {
        throw NumericError("non-finite parameters after iteration " + std::to_string(iteration));
      }
      ++iteration;
      loss_sum += static_cast<double>(bwd.mean_loss) * static_cast<double>(batch->labels.size());
      seen += batch->labels.size();
    }

    const Evaluation eval = evaluate(result.params, test_set);
    if (!std::isfinite(eval.mean_loss)) {
      throw NumericError("non-finite test loss after epoch " + std::to_string(epoch));
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.test_accuracy = eval.accuracy;
    m.test_loss = eval.mean_loss;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.lr = lr_at(iteration, options.sgd);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.epochs.push_back(m);
    result.final_evaluation = eval;
    if (on_epoch) on_epoch(m);
  }
  result.iterations = iteration;
  return result;
}

std::string format_metrics_csv(const MetricsHistory& history) {
  std::string out = "epoch,test_accuracy,test_loss,train_loss,lr\n";
  char line[160];
  for (const auto& e : history.epochs) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.test_accuracy,
                  e.test_loss, e.train_loss, e.lr);
    out += line;
  }
  return out;
}

void report_metrics(const MetricsHistory& history, const std::filesystem::path& path) {
  if (history.epochs.empty()) throw StateError("metrics history is empty");
  write_text_file(path, format_metrics_csv(history));
}

MetricsHistory parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "epoch,test_accuracy,test_loss,train_loss,lr") {
    throw FormatError("metrics CSV header is missing or wrong");
  }
  MetricsHistory history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics e;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf", &e.epoch, &e.test_accuracy, &e.test_loss,
                    &e.train_loss, &e.lr) != 5) {
      throw FormatError("malformed metrics row: " + line);
    }
    history.epochs.push_back(e);
  }
  return history;
}

}  // namespace adcnn
