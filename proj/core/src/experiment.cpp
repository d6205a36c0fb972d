#include "adcnn/experiment.hpp"

#include <cstdio>

#include "adcnn/byte_io.hpp"
#include "adcnn/errors.hpp"
#include "adcnn/rng.hpp"

namespace adcnn {

namespace {

constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kBalanceStream = 3;

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string run_tag(int variant, bool balanced) {
  return (balanced ? "b_mri" : "mri") + std::to_string(variant);
}

RunOutcome run_once(const ExperimentConfig& config, const Dataset& source, bool balanced,
                    std::size_t run_index, const std::filesystem::path& run_dir) {
  RunOutcome out;
  out.run_index = run_index;
  out.seed = config.seed + run_index;

  Dataset data = source;
  if (balanced) {
    const std::size_t minority = std::min(data.count_label(0), data.count_label(1));
    const std::size_t target = config.balance_target ? config.balance_target : minority;
    data = balance_dataset(data, target, derive_seed(out.seed, kBalanceStream));
  }
  const SplitResult split =
      split_dataset(data, config.test_fraction, derive_seed(out.seed, kSplitStream), config.split_mode());
  const TrainResult result = train(config.train_options(out.seed), split.train, split.test);

  out.accuracy = result.final_evaluation.accuracy;
  out.subject_accuracy = result.final_evaluation.subject_accuracy;
  out.test_loss = result.final_evaluation.mean_loss;
  out.train_records = split.train.size();
  out.test_records = split.test.size();

  const std::string stem = "run" + std::to_string(run_index);
  std::filesystem::create_directories(run_dir);
  report_metrics(result.history, run_dir / (stem + ".csv"));
  save_checkpoint(result.params, run_dir / (stem + ".lnt5"));
  return out;
}

}  // namespace

std::optional<ReferenceAccuracy> reference_accuracy(int variant, bool balanced) {
  struct Entry {
    int variant;
    const char* lenet;
    const char* googlenet;
    const char* balanced_lenet;
  };
  static constexpr Entry kTable[] = {
      {0, "0.97446", "0.845043", "0.9572"},
      {2, "0.98566", "0.98452", "0.975"},
      {3, "0.9879", "0.988431", "0.9781"},
      {4, "0.98672", "0.987758", "0.9746"},
  };
  for (const Entry& e : kTable) {
    if (e.variant != variant) continue;
    if (balanced) return ReferenceAccuracy{e.balanced_lenet, ""};
    return ReferenceAccuracy{e.lenet, e.googlenet};
  }
  return std::nullopt;
}

std::string row_label(int variant, bool balanced) {
  return std::string(balanced ? "B. " : "") + "Structural MRI " + std::to_string(variant);
}

std::filesystem::path dataset_path(const std::filesystem::path& dir, int variant) {
  return dir / ("mri" + std::to_string(variant) + ".smrd");
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string format_report(const ExperimentConfig& config, std::span<const ReportRow> rows) {
  std::string text;
  text += "# Structural MRI AD vs NC, adopted LeNet\n";
  text += "config_hash = " + config.hash() + "\n";
  text += "architecture = " + config.layer_spec().serialize() + "\n";
  text += "epochs = " + std::to_string(config.epochs) + "\n";
  text += "repeats = " + std::to_string(config.repeats) + "\n";
  text += "batch_size = " + std::to_string(config.batch_size) + "\n";
  text += "stepsize = " + std::to_string(config.sgd.stepsize) + "\n";
  text += "split = " + std::string(config.subject_level_split ? "subject" : "slice") +
          " test_fraction=" + fixed6(config.test_fraction) + "\n";
  text += "accuracy = slice-level test accuracy; subject_vote = per-subject majority vote\n";
  text += "reference columns are published values and were not reproduced here\n";
  text += "\n";
  text += "dataset\tarchitecture\tmean_accuracy\truns\tsubject_vote_mean\treference_lenet\treference_googlenet\n";
  for (const ReportRow& row : rows) {
    std::string runs;
    for (std::size_t i = 0; i < row.runs.size(); ++i) {
      if (i) runs += " ";
      runs += fixed6(row.runs[i].accuracy);
    }
    const auto ref = reference_accuracy(row.variant, row.balanced);
    text += row.label + "\tAdopted LeNet\t" + fixed6(row.mean_accuracy) + "\t" + runs + "\t" +
            fixed6(row.mean_subject_accuracy) + "\t" + (ref ? ref->lenet : "-") + "\t" +
            (ref && !ref->googlenet.empty() ? ref->googlenet : "-") + "\n";
  }
  return text;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressCallback& progress) {
  config.validate();
  const std::filesystem::path data_dir = config.dataset_dir;
  const std::filesystem::path out_dir = config.out_dir;

  std::string missing;
  for (int v : config.variants) {
    if (!std::filesystem::exists(dataset_path(data_dir, v))) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(v);
    }
  }
  if (!missing.empty()) {
    throw IoError("no dataset in " + data_dir.string() + " for variant(s) " + missing);
  }

  std::vector<ReportRow> rows;
  std::vector<bool> modes{false};
  if (config.balanced) modes.push_back(true);
  for (bool balanced : modes) {
    for (int v : config.variants) {
      const Dataset source = read_dataset(dataset_path(data_dir, v));
      ReportRow row;
      row.label = row_label(v, balanced);
      row.variant = v;
      row.balanced = balanced;
      std::vector<double> acc, subj;
      for (std::size_t r = 0; r < config.repeats; ++r) {
        row.runs.push_back(run_once(config, source, balanced, r, out_dir / run_tag(v, balanced)));
        acc.push_back(row.runs.back().accuracy);
        subj.push_back(row.runs.back().subject_accuracy);
        if (progress) {
          progress(row.label + " run " + std::to_string(r) + " accuracy " + fixed6(acc.back()));
        }
      }
      row.mean_accuracy = mean_of(acc);
      row.mean_subject_accuracy = mean_of(subj);
      rows.push_back(std::move(row));
    }
  }

  ExperimentReport report;
  report.text = format_report(config, rows);
  report.rows = std::move(rows);
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "report.txt", report.text);
  write_text_file(out_dir / "config.txt", config.serialize());
  return report;
}

}  // namespace adcnn
