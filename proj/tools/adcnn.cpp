// adcnn: phantom generation, dataset building, training and experiments.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adcnn/byte_io.hpp"
#include "adcnn/config.hpp"
#include "adcnn/dataset.hpp"
#include "adcnn/errors.hpp"
#include "adcnn/experiment.hpp"
#include "adcnn/lenet.hpp"
#include "adcnn/phantom.hpp"
#include "adcnn/pipeline.hpp"
#include "adcnn/rng.hpp"
#include "adcnn/training.hpp"
#include "adcnn/volume.hpp"

namespace fs = std::filesystem;
using namespace adcnn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool balanced = false;
  int variant = -1;
  bool subject_level = false;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed_set) cfg.seed = c.seed;
  if (c.balanced) cfg.balanced = true;
  if (c.subject_level) cfg.subject_level_split = true;
  if (c.variant >= 0) cfg.variants = {c.variant};
  cfg.validate();
  return cfg;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- volume index ------------------------------------------------------------
// Tab-separated: path, subject_id, label. Relative paths resolve against the
// index file's directory.

struct IndexEntry {
  fs::path path;
  std::uint32_t subject_id = 0;
  ClassLabel label = ClassLabel::NC;
};

std::vector<IndexEntry> read_index(const fs::path& tsv) {
  std::ifstream in(tsv);
  if (!in) throw IoError("cannot open " + tsv.string());
  std::vector<IndexEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string path, subject, label;
    if (!std::getline(row, path, '\t') || !std::getline(row, subject, '\t') ||
        !std::getline(row, label, '\t')) {
      throw FormatError(tsv.string() + ":" + std::to_string(lineno) + ": expected path, subject, label");
    }
    if (path == "path") continue;
    IndexEntry e;
    e.path = fs::path(path).is_absolute() ? fs::path(path) : tsv.parent_path() / path;
    try {
      e.subject_id = static_cast<std::uint32_t>(std::stoul(subject));
    } catch (const std::exception&) {
      throw FormatError(tsv.string() + ":" + std::to_string(lineno) + ": bad subject id");
    }
    e.label = parse_label(label);
    out.push_back(std::move(e));
  }
  if (out.empty()) throw FormatError(tsv.string() + " lists no volumes");
  return out;
}

void write_index(const fs::path& tsv, const std::vector<IndexEntry>& entries) {
  std::string text = "path\tsubject_id\tlabel\n";
  for (const auto& e : entries) {
    text += e.path.string() + "\t" + std::to_string(e.subject_id) + "\t" + to_string(e.label) + "\n";
  }
  write_text_file(tsv, text);
}

// ---- subcommands -------------------------------------------------------------

int cmd_phantom_gen(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  PhantomConfig pc = cfg.phantom;
  if (c.seed_set) pc.seed = c.seed;
  const fs::path out = c.out.empty() ? fs::path("phantoms") : fs::path(c.out);
  fs::create_directories(out);
  std::vector<IndexEntry> entries;
  for (const Volume3D& v : generate_phantoms(pc)) {
    char name[32];
    std::snprintf(name, sizeof name, "sub-%03u.nii.gz", v.subject_id);
    write_nifti(v, out / name);
    entries.push_back({name, v.subject_id, v.label});
  }
  write_index(out / "subjects.tsv", entries);
  std::cout << "wrote " << entries.size() << " phantom volumes to " << out.string() << "\n";
  return kOk;
}

int cmd_ingest(const Common& c, const std::string& dir) {
  const fs::path index = fs::path(dir) / "subjects.tsv";
  const auto entries = read_index(index);
  std::vector<IndexEntry> checked;
  for (const auto& e : entries) {
    const Volume3D v = read_nifti(e.path);
    std::cout << e.path.filename().string() << "\t" << v.nx() << "x" << v.ny() << "x" << v.nz()
              << "\t" << to_string(e.label) << "\n";
    checked.push_back({fs::absolute(e.path).lexically_normal(), e.subject_id, e.label});
  }
  const fs::path out = c.out.empty() ? fs::path("volumes.tsv") : fs::path(c.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_index(out, checked);
  std::cout << "indexed " << checked.size() << " volumes into " << out.string() << "\n";
  return kOk;
}

int cmd_build_dataset(const Common& c, const std::string& index_path) {
  const ExperimentConfig cfg = resolve_config(c);
  const auto entries = read_index(index_path);
  std::vector<Volume3D> volumes;
  for (const auto& e : entries) {
    Volume3D v = read_nifti(e.path);
    v.subject_id = e.subject_id;
    v.label = e.label;
    volumes.push_back(std::move(v));
  }
  const auto index_bytes = read_file(index_path);
  BuildOptions opts;
  opts.slices = cfg.slices;
  opts.per_volume_scaling = cfg.per_volume_scaling;
  opts.seed = cfg.seed;
  opts.source_hash = hex64(fnv1a64(index_bytes));

  const fs::path out = c.out.empty() ? fs::path(cfg.dataset_dir) : fs::path(c.out);
  fs::create_directories(out);
  for (int v : cfg.variants) {
    Dataset ds = build_dataset(volumes, v, opts);
    ds.annotate("batch_size", std::to_string(cfg.batch_size));
    write_dataset(ds, dataset_path(out, v));
    std::cout << dataset_path(out, v).string() << ": " << ds.size() << " records ("
              << ds.count_label(1) << " AD, " << ds.count_label(0) << " NC)\n";
  }
  return kOk;
}

int cmd_train(const Common& c, const std::string& dataset_file) {
  const ExperimentConfig cfg = resolve_config(c);
  Dataset data = read_dataset(dataset_file);
  if (cfg.balanced) {
    const std::size_t minority = std::min(data.count_label(0), data.count_label(1));
    data = balance_dataset(data, cfg.balance_target ? cfg.balance_target : minority,
                           derive_seed(cfg.seed, 3));
  }
  const SplitResult split =
      split_dataset(data, cfg.test_fraction, derive_seed(cfg.seed, 2), cfg.split_mode());
  std::cout << "train " << split.train.size() << " / test " << split.test.size() << " records\n";
  const TrainResult result =
      train(cfg.train_options(cfg.seed), split.train, split.test, [](const EpochMetrics& m) {
        std::cout << "epoch " << m.epoch << " test_accuracy " << fixed6(m.test_accuracy)
                  << " test_loss " << fixed6(m.test_loss) << " train_loss " << fixed6(m.train_loss)
                  << " lr " << m.lr << "\n";
      });
  const fs::path out = c.out.empty() ? fs::path(cfg.out_dir) : fs::path(c.out);
  fs::create_directories(out);
  report_metrics(result.history, out / "metrics.csv");
  save_checkpoint(result.params, out / "model.lnt5");
  write_text_file(out / "config.txt", cfg.serialize());
  std::cout << "final test accuracy " << fixed6(result.final_evaluation.accuracy)
            << " (subject vote " << fixed6(result.final_evaluation.subject_accuracy) << ")\n";
  return kOk;
}

int cmd_eval(const Common& c, const std::string& model, const std::string& dataset_file) {
  const ExperimentConfig cfg = resolve_config(c);
  const auto params = load_checkpoint(model, cfg.layer_spec());
  const Evaluation e = evaluate(params, read_dataset(dataset_file));
  std::cout << "accuracy " << fixed6(e.accuracy) << " (" << e.correct << "/" << e.total << ")\n"
            << "mean_loss " << fixed6(e.mean_loss) << "\n"
            << "subject_vote_accuracy " << fixed6(e.subject_accuracy) << "\n";
  return kOk;
}

int cmd_experiment(const Common& c) {
  ExperimentConfig cfg = resolve_config(c);
  if (!c.out.empty()) cfg.out_dir = c.out;
  const ExperimentReport report =
      run_experiment(cfg, [](const std::string& line) { std::cerr << line << "\n"; });
  std::cout << report.text;
  return kOk;
}

int cmd_inspect(const std::string& file, std::size_t show) {
  const auto bytes = read_file(file);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "SMRD")) {
    const Dataset ds = decode_dataset(bytes);
    std::cout << "dataset " << file << "\n" << ds.manifest().serialize();
    const std::size_t n = std::min(show, ds.size());
    for (std::size_t i = 0; i < n; ++i) {
      const SliceRecord& r = ds.records()[i];
      unsigned sum = 0;
      for (auto p : r.pixels) sum += p;
      std::cout << "record " << i << " label=" << unsigned(r.label) << " subject=" << r.subject_id
                << " axial=" << r.axial_index << " variant=" << unsigned(r.variant)
                << " pixel_sum=" << sum << "\n";
    }
    return kOk;
  }
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "LNT5")) {
    const auto params = decode_checkpoint(bytes);
    std::cout << "checkpoint " << file << "\n"
              << "architecture " << params.spec.serialize() << "\n"
              << "fingerprint " << hex64(params.fingerprint()) << "\n"
              << "parameters " << params.parameter_count() << "\n";
    return kOk;
  }
  const Volume3D v = parse_nifti(bytes);
  const IntensityRange r = intensity_range(v.voxels);
  std::cout << "nifti " << file << "\n"
            << "dims " << v.nx() << " " << v.ny() << " " << v.nz() << "\n"
            << "voxel_mm " << v.voxel_mm[0] << " " << v.voxel_mm[1] << " " << v.voxel_mm[2] << "\n"
            << "range " << r.lo << " " << r.hi << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LeNet-5 AD/NC classification pipeline"};
  app.require_subcommand(1);
  Common c;

  const auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](const std::uint64_t& s) { c.seed = s; c.seed_set = true; }, "base seed");
    sub->add_option("--out", c.out, "output path");
    sub->add_flag("--balanced", c.balanced, "down-sample the majority class before splitting");
    sub->add_option("--variant", c.variant, "smoothing variant")->check(CLI::IsMember({0, 2, 3, 4}));
    sub->add_flag("--subject-level-split", c.subject_level, "split by subject instead of slice");
  };

  auto* phantom = app.add_subcommand("phantom-gen", "write synthetic NIfTI volumes and subjects.tsv");
  add_common(phantom);

  std::string ingest_dir;
  auto* ingest = app.add_subcommand("ingest", "validate a NIfTI directory into a volume index");
  ingest->add_option("dir", ingest_dir, "directory with subjects.tsv")->required()->check(CLI::ExistingDirectory);
  add_common(ingest);

  std::string index_path;
  auto* build = app.add_subcommand("build-dataset", "volume index -> dataset file per variant");
  build->add_option("index", index_path, "volume index (.tsv)")->required()->check(CLI::ExistingFile);
  add_common(build);

  std::string train_dataset;
  auto* trainer = app.add_subcommand("train", "split, train and save a model");
  trainer->add_option("dataset", train_dataset, "dataset file")->required()->check(CLI::ExistingFile);
  add_common(trainer);

  std::string eval_model, eval_dataset;
  auto* evaluator = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  evaluator->add_option("model", eval_model, "checkpoint file")->required()->check(CLI::ExistingFile);
  evaluator->add_option("dataset", eval_dataset, "dataset file")->required()->check(CLI::ExistingFile);
  add_common(evaluator);

  auto* experiment = app.add_subcommand("experiment", "repeated runs over variants; writes report.txt");
  add_common(experiment);

  std::string inspect_file;
  std::size_t inspect_records = 5;
  auto* inspect = app.add_subcommand("inspect", "dump a dataset, checkpoint or NIfTI header");
  inspect->add_option("file", inspect_file)->required()->check(CLI::ExistingFile);
  inspect->add_option("--records", inspect_records, "records to list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*phantom) return cmd_phantom_gen(c);
    if (*ingest) return cmd_ingest(c, ingest_dir);
    if (*build) return cmd_build_dataset(c, index_path);
    if (*trainer) return cmd_train(c, train_dataset);
    if (*evaluator) return cmd_eval(c, eval_model, eval_dataset);
    if (*experiment) return cmd_experiment(c);
    if (*inspect) return cmd_inspect(inspect_file, inspect_records);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
