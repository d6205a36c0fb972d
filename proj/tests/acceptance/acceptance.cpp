// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adcnn/byte_io.hpp"
#include "adcnn/config.hpp"
#include "adcnn/dataset.hpp"
#include "adcnn/experiment.hpp"
#include "adcnn/layers.hpp"
#include "adcnn/lenet.hpp"
#include "adcnn/phantom.hpp"
#include "adcnn/pipeline.hpp"
#include "adcnn/rng.hpp"
#include "adcnn/sgd.hpp"
#include "adcnn/training.hpp"
#include "adcnn/volume.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace adcnn;
using namespace adcnn::testing;

namespace {

struct Outcome {
  enum Status { Pass, Fail, Skip } status = Fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

fs::path work_root() {
  const fs::path p = fs::temp_directory_path() / "adcnn_acceptance";
  fs::create_directories(p);
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = work_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + ADCNN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

// ---- 1 -----------------------------------------------------------------------

double worst_layer_error(int instances) {
  double worst = 0;
  const auto track = [&](double analytic, double numeric) {
    worst = std::max(worst, relative_error(analytic, numeric));
  };
  for (int s = 0; s < instances; ++s) {
    Rng rng(7000 + s);
    // conv
    {
      const std::size_t C = 1 + rng.below(3), F = 1 + rng.below(3), m = 2 + rng.below(4);
      TensorD x = random_tensor({C, m + 3, m + 4}, rng), w = random_tensor({F, C, m, m}, rng);
      TensorD b = random_tensor({F}, rng);
      const TensorD r = random_tensor({F, 4, 5}, rng);
      const auto g = conv2d_backward(x, ConvKernel<double>{w, b}, r);
      const auto f = [&] { return dot(conv2d_forward(x, w, b), r); };
      for (std::size_t i = 0; i < x.size(); ++i) track(g.input[i], central_difference(f, x.values()[i]));
      for (std::size_t i = 0; i < w.size(); ++i) track(g.weights[i], central_difference(f, w.values()[i]));
      for (std::size_t i = 0; i < b.size(); ++i) track(g.bias[i], central_difference(f, b.values()[i]));
    }
    // pool
    {
      TensorD x = random_tensor({2, 6, 8}, rng);
      const TensorD r = random_tensor({2, 3, 4}, rng);
      const TensorD g = maxpool2x2_backward(maxpool2x2_forward(x).argmax, r);
      const auto f = [&] { return dot(maxpool2x2_forward(x).output, r); };
      for (std::size_t i = 0; i < x.size(); ++i) track(g[i], central_difference(f, x.values()[i]));
    }
    // fully connected
    {
      TensorD x = random_tensor({12}, rng), w = random_tensor({5, 12}, rng), b = random_tensor({5}, rng);
      const TensorD r = random_tensor({5}, rng);
      const auto g = fc_backward(x, w, r);
      const auto f = [&] { return dot(fc_forward(x, w, b), r); };
      for (std::size_t i = 0; i < x.size(); ++i) track(g.input[i], central_difference(f, x.values()[i]));
      for (std::size_t i = 0; i < w.size(); ++i) track(g.weights[i], central_difference(f, w.values()[i]));
      for (std::size_t i = 0; i < b.size(); ++i) track(g.bias[i], central_difference(f, b.values()[i]));
    }
    // relu
    {
      TensorD x = random_away_from_zero({16}, rng);
      const TensorD r = random_tensor({16}, rng);
      const TensorD g = relu_backward(x, r);
      const auto f = [&] { return dot(relu_forward(x), r); };
      for (std::size_t i = 0; i < x.size(); ++i) track(g[i], central_difference(f, x.values()[i]));
    }
    // softmax cross-entropy
    {
      TensorD z = random_tensor({2 + rng.below(5)}, rng, -3.0, 3.0);
      const std::size_t label = rng.below(z.size());
      const auto lg = softmax_cross_entropy(z, label);
      const auto f = [&] { return reference_cross_entropy({z.values().begin(), z.values().end()}, label); };
      for (std::size_t i = 0; i < z.size(); ++i) track(lg.grad_logits[i], central_difference(f, z.values()[i]));
    }
  }
  return worst;
}

double worst_network_error(int instances) {
  double worst = 0;
  for (int s = 0; s < instances; ++s) {
    Rng rng(8000 + s);
    auto params = init_params<double>(LayerSpec::lenet5(), 900 + s);
    for (auto& l : params.layers)
      for (double& b : l.bias.values()) b = rng.uniform(-0.1, 0.1);
    const TensorD batch = random_tensor({2, 1, 28, 28}, rng, 0.0, 1.0);
    const std::vector<std::size_t> labels{rng.below(2), rng.below(2)};
    const auto g = backward(params, forward(params, batch), labels);
    const auto loss = [&] {
      const TensorD z = infer_logits(params, batch);
      return 0.5 * (reference_cross_entropy({z.at(0, 0), z.at(0, 1)}, labels[0]) +
                    reference_cross_entropy({z.at(1, 0), z.at(1, 1)}, labels[1]));
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto& p = params.layers[l];
      if (p.weights.empty()) continue;
      for (int k = 0; k < 6; ++k) {
        const std::size_t i = smooth_index(params, batch, p.weights.values(), rng);
        worst = std::max(worst, relative_error(g.gradients[l].weights[i], central_difference(loss, p.weights.values()[i])));
      }
      for (int k = 0; k < 2; ++k) {
        const std::size_t i = smooth_index(params, batch, p.bias.values(), rng);
        worst = std::max(worst, relative_error(g.gradients[l].bias[i], central_difference(loss, p.bias.values()[i])));
      }
    }
  }
  return worst;
}

Outcome criterion1() {
  const double layers = worst_layer_error(20);
  const double network = worst_network_error(20);
  return verdict(layers <= kFdTolerance && network <= kFdTolerance,
                 "worst relative error: layers " + sci(layers) + ", whole network " + sci(network) +
                     " (20 instances each, step 1e-5, kink-free stencils)");
}

// ---- 2 -----------------------------------------------------------------------

Outcome criterion2() {
  const auto params = init_params<float>(LayerSpec::lenet5(), 1);
  const ForwardResult<float> f = forward(params, Tensor(Shape{1, 1, 28, 28}, 0.5f));
  std::vector<Shape> seen;
  for (std::size_t l = 1; l < f.cache.layers.size(); ++l) seen.push_back(f.cache.layers[l].inputs[0].shape());
  seen.push_back({f.logits.dim(1)});
  const std::vector<Shape> want{{20, 24, 24}, {20, 12, 12}, {50, 8, 8}, {50, 4, 4}, {500}, {2}};
  const bool chain_ok = params.spec.shape_chain() == want;
  const bool flat_ok = shape_volume(seen[3]) == 800;
  // Dense layers see their input flattened; compare element counts there.
  bool seen_ok = seen.size() == want.size();
  for (std::size_t i = 0; seen_ok && i < want.size(); ++i) {
    seen_ok = i < 3 ? seen[i] == want[i] : shape_volume(seen[i]) == shape_volume(want[i]);
  }
  std::string text;
  for (const auto& s : want) text += (text.empty() ? "" : " -> ") + shape_string(s);
  return verdict(chain_ok && flat_ok && seen_ok, text + ", flatten 800");
}

// ---- 3 -----------------------------------------------------------------------

Outcome criterion3() {
  const SgdConfig c;
  bool exact = true, decimals = true;
  const double expected[] = {0.01, 0.001, 0.0001};
  for (std::uint64_t it = 0; it < 3 * c.stepsize; ++it) {
    const double lr = lr_at(it, c);
    const double closed = c.base_lr * std::pow(c.gamma, std::floor(double(it) / double(c.stepsize)));
    exact = exact && lr == closed;
    const double want = expected[it / c.stepsize];
    decimals = decimals && std::fabs(lr - want) <= std::nextafter(want, 1.0) - want;
  }
  return verdict(exact && decimals, "3x10000 iterations bit-exact with base*gamma^floor(it/stepsize); "
                                    "0.01 / 0.001 / 0.0001 to within one ulp");
}

// ---- 4 -----------------------------------------------------------------------

std::vector<double> impulse_profile(double voxel_mm, double sigma_mm) {
  const std::size_t n = 41;
  Volume3D v = Volume3D::zeros(n, n, n, {voxel_mm, voxel_mm, voxel_mm});
  v.at(n / 2, n / 2, n / 2) = 1.0;
  const Volume3D out = gaussian_smooth3d(v, sigma_mm);
  std::vector<double> p(n);
  for (std::size_t x = 0; x < n; ++x) p[x] = out.at(x, n / 2, n / 2);
  return p;
}

Outcome criterion4() {
  bool ok = true;
  std::string detail;
  for (double sigma : {1.0, 2.0, 3.0}) {
    const double ratio = measure_fwhm(impulse_profile(1.0, sigma)) / sigma;
    ok = ok && std::fabs(ratio / kFwhmPerSigma - 1.0) <= 0.02;
    detail += "FWHM/sigma(" + fixed(sigma, 0) + ")=" + fixed(ratio) + " ";
  }
  const double sigmas[] = {2.0, 3.0, 4.0}, expected_mm[] = {4.6, 7.0, 9.3};
  for (int i = 0; i < 3; ++i) {
    const double mm = 2.0 * measure_fwhm(impulse_profile(2.0, sigmas[i]));
    ok = ok && std::fabs(mm / expected_mm[i] - 1.0) <= 0.05;
    detail += "sigma " + fixed(sigmas[i], 0) + "mm->" + fixed(mm, 2) + "mm ";
  }
  detail.pop_back();
  return verdict(ok, detail);
}

// ---- 5 and 6 -------------------------------------------------------------------

struct PhantomRun {
  double accuracy = 0;
  double seconds = 0;
};

PhantomRun phantom_run(std::uint64_t seed, bool balanced) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = fresh_dir("phantom_" + std::to_string(seed) + (balanced ? "_b" : ""));
  PhantomConfig pc;  // 33 AD, 7 NC, 32^3 at 2 mm
  pc.seed = seed;
  std::vector<Volume3D> volumes;
  for (const Volume3D& v : generate_phantoms(pc)) {
    const fs::path file = dir / ("sub-" + std::to_string(v.subject_id) + ".nii.gz");
    write_nifti(v, file);
    Volume3D back = read_nifti(file);
    back.subject_id = v.subject_id;
    back.label = v.label;
    volumes.push_back(std::move(back));
  }
  BuildOptions opts;
  opts.seed = seed;
  write_dataset(build_dataset(volumes, 3, opts), dir / "mri3.smrd");
  Dataset data = read_dataset(dir / "mri3.smrd");
  if (balanced) {
    data = balance_dataset(data, std::min(data.count_label(0), data.count_label(1)), derive_seed(seed, 3));
  }
  const SplitResult split = split_dataset(data, 0.25, derive_seed(seed, 2));
  TrainOptions o;  // 30 epochs, batch 64, step policy defaults
  o.seed = seed;
  const TrainResult r = train(o, split.train, split.test);
  fs::remove_all(dir);
  return {r.final_evaluation.accuracy,
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

const std::uint64_t kSeeds[] = {1, 2, 3};
std::vector<PhantomRun> g_original;

Outcome criterion5() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t s : kSeeds) {
    const PhantomRun r = phantom_run(s, false);
    g_original.push_back(r);
    ok = ok && r.accuracy >= 0.95 && r.seconds < 900;
    detail += "seed " + std::to_string(s) + ": acc " + fixed(r.accuracy) + " in " + fixed(r.seconds, 0) + "s; ";
  }
  return verdict(ok, detail + "need >= 0.95 and < 900 s each");
}

Outcome criterion6() {
  if (g_original.empty()) {
    for (std::uint64_t s : kSeeds) g_original.push_back(phantom_run(s, false));
  }
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; ok && i < std::size(kSeeds); ++i) {
    const PhantomRun r = phantom_run(kSeeds[i], true);
    const double delta = r.accuracy - g_original[i].accuracy;
    ok = ok && std::fabs(delta) <= 0.03;
    detail += "seed " + std::to_string(kSeeds[i]) + ": balanced " + fixed(r.accuracy) + " delta " + fixed(delta) + "; ";
  }
  return verdict(ok, detail + "need |delta| <= 0.03");
}

// ---- 7 and 9: CLI experiment ---------------------------------------------------

/// Generates phantoms and datasets through the CLI; returns the config path.
fs::path prepare_cli_experiment(const fs::path& dir, const std::string& extra) {
  const fs::path cfg = dir / "experiment.cfg";
  std::ofstream(cfg) << "# reduced desk-scale run\n"
                     << "phantom.subjects_ad = 3\nphantom.subjects_nc = 2\nphantom.nz = 16\n"
                     << "batch_size = 16\n"
                     << "dataset_dir = " << (dir / "data").string() << "\n"
                     << "out_dir = " << (dir / "out").string() << "\n"
                     << extra;
  const fs::path log = dir / "prepare.log";
  if (run_cli("phantom-gen --config \"" + cfg.string() + "\" --out \"" + (dir / "nii").string() + "\"", log) != 0 ||
      run_cli("ingest \"" + (dir / "nii").string() + "\" --out \"" + (dir / "volumes.tsv").string() + "\"", log) != 0 ||
      run_cli("build-dataset \"" + (dir / "volumes.tsv").string() + "\" --config \"" + cfg.string() + "\"", log) != 0) {
    throw std::runtime_error("CLI data preparation failed, see " + log.string());
  }
  return cfg;
}

Outcome criterion7() {
  const fs::path dir = fresh_dir("determinism");
  const fs::path cfg = prepare_cli_experiment(dir, "epochs = 2\nrepeats = 2\nvariants = 0, 3\nbalanced = true\n");
  const std::string args = "experiment --config \"" + cfg.string() + "\" --seed 11";
  if (run_cli(args, dir / "run1.log") != 0) return verdict(false, "first experiment run failed");
  const auto first = snapshot(dir / "out");
  fs::remove_all(dir / "out");
  if (run_cli(args, dir / "run2.log") != 0) return verdict(false, "second experiment run failed");
  const auto second = snapshot(dir / "out");
  std::size_t csv = 0, ckpt = 0;
  for (const auto& [name, _] : first) {
    csv += name.ends_with(".csv");
    ckpt += name.ends_with(".lnt5");
  }
  const bool ok = first == second && first.contains("report.txt") && csv == 8 && ckpt == 8;
  std::string diff;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) diff += " " + name;
  }
  return verdict(ok, std::to_string(first.size()) + " files (report, config, " + std::to_string(csv) + " CSVs, " +
                         std::to_string(ckpt) + " checkpoints) byte-identical across two CLI runs" +
                         (diff.empty() ? "" : "; differing:" + diff));
}

Outcome criterion9() {
  const fs::path dir = fresh_dir("matrix");
  const fs::path cfg = prepare_cli_experiment(dir, "epochs = 1\nrepeats = 5\nvariants = 0, 2, 3, 4\nbalanced = true\n");
  if (run_cli("experiment --config \"" + cfg.string() + "\"", dir / "run.log") != 0) {
    return verdict(false, "experiment run failed");
  }
  const auto bytes = read_file(dir / "out" / "report.txt");
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  bool in_table = false;
  std::vector<std::string> labels;
  bool means_ok = true, runs_ok = true, arch_ok = true;
  while (std::getline(in, line)) {
    if (line.starts_with("dataset\t")) {
      in_table = true;
      continue;
    }
    if (!in_table || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (cols.size() < 4) return verdict(false, "malformed report row: " + line);
    labels.push_back(cols[0]);
    arch_ok = arch_ok && cols[1] == "Adopted LeNet";
    std::vector<double> runs;
    std::stringstream rs(cols[3]);
    for (double v; rs >> v;) runs.push_back(v);
    runs_ok = runs_ok && runs.size() == 5;
    means_ok = means_ok && std::fabs(std::stod(cols[2]) - mean_of(runs)) <= 1e-6;
  }
  const std::vector<std::string> want{"Structural MRI 0",    "Structural MRI 2",    "Structural MRI 3",
                                      "Structural MRI 4",    "B. Structural MRI 0", "B. Structural MRI 2",
                                      "B. Structural MRI 3", "B. Structural MRI 4"};
  const bool ok = labels == want && means_ok && runs_ok && arch_ok;
  return verdict(ok, std::to_string(labels.size()) + " rows, 5 runs each, mean column = arithmetic mean of runs");
}

// ---- 8 -----------------------------------------------------------------------

Outcome criterion8() {
  PhantomConfig pc;
  pc.subjects_ad = 4;
  pc.subjects_nc = 2;
  const Dataset ds = build_dataset(generate_phantoms(pc), 2);
  const fs::path file = fresh_dir("store") / "mri2.smrd";
  write_dataset(ds, file);
  const auto bytes = read_file(file);
  const Dataset back = read_dataset(file);
  const bool roundtrip = back == ds && encode_dataset(back) == bytes;

  bool split_ok = true;
  for (std::size_t n : {ds.size(), std::size_t{7}, std::size_t{1001}}) {
    std::vector<SliceRecord> rs(n, ds.records()[0]);
    for (std::size_t i = 0; i < n; ++i) rs[i].axial_index = static_cast<std::uint16_t>(i);
    const SplitResult s = split_dataset(Dataset(rs), 0.25, 5);
    split_ok = split_ok && s.test.size() == n / 4 && s.train.size() == n - n / 4;
  }

  Manifest m;
  m.set("count.ad", std::uint64_t{52507});
  m.set("count.nc", std::uint64_t{9828});
  const auto get = [&](const char* k) { return std::stoull(*Manifest::parse(m.serialize()).get(k)); };
  const std::uint64_t total = get("count.ad") + get("count.nc");
  const double ratio = double(get("count.ad")) / double(get("count.nc"));
  const bool corpus_ok = total == 62335 && std::fabs(ratio - 5.34) < 0.005;

  return verdict(roundtrip && split_ok && corpus_ok,
                 std::to_string(bytes.size()) + "-byte file round-trips exactly; floor(n/4) test counts; " +
                     "52507 + 9828 = " + std::to_string(total) + ", ratio " + fixed(ratio, 3));
}

// ---- 10 ----------------------------------------------------------------------

std::vector<std::uint8_t> idx_payload(const fs::path& path, std::size_t header) {
  std::vector<std::uint8_t> bytes = read_file(path);
  if (path.extension() == ".gz") bytes = gzip_decompress(bytes);
  if (bytes.size() < header) throw FormatError("short idx file " + path.string());
  return {bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end()};
}

fs::path find_idx(const fs::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    if (fs::exists(dir / (stem + suffix))) return dir / (stem + suffix);
  }
  throw IoError("missing " + stem + " in " + dir.string());
}

Outcome criterion10() {
  const char* env = std::getenv("ADCNN_MNIST_DIR");
  if (!env || !*env) return {Outcome::Skip, "set ADCNN_MNIST_DIR to the handwritten-digit idx files to run"};
  const fs::path dir = env;
  const auto train_x = idx_payload(find_idx(dir, "train-images-idx3-ubyte"), 16);
  const auto train_y = idx_payload(find_idx(dir, "train-labels-idx1-ubyte"), 8);
  const auto test_x = idx_payload(find_idx(dir, "t10k-images-idx3-ubyte"), 16);
  const auto test_y = idx_payload(find_idx(dir, "t10k-labels-idx1-ubyte"), 8);

  auto params = init_params<float>(LayerSpec::lenet5(500, 10), 1);
  auto velocity = zeros_like(params);
  const SgdConfig sgd;
  const std::size_t n = train_y.size(), bs = 64;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t it = 0;
  const auto load = [](const std::vector<std::uint8_t>& x, std::span<const std::size_t> idx) {
    Tensor t(Shape{idx.size(), 1, 28, 28});
    for (std::size_t b = 0; b < idx.size(); ++b)
      for (std::size_t p = 0; p < 784; ++p) t[b * 784 + p] = float(x[idx[b] * 784 + p]) * kPixelScale;
    return t;
  };
  double accuracy = 0;
  for (int epoch = 1; epoch <= 10; ++epoch) {
    Rng rng(derive_seed(1, 1000 + epoch));
    rng.shuffle(std::span(order));
    for (std::size_t at = 0; at < n; at += bs) {
      const std::span<const std::size_t> idx(order.data() + at, std::min(bs, n - at));
      std::vector<std::size_t> labels;
      for (std::size_t i : idx) labels.push_back(train_y[i]);
      const auto g = backward(params, forward(params, load(train_x, idx)), labels);
      sgd_step(params, g.gradients, velocity, sgd, it++);
    }
    std::size_t correct = 0;
    for (std::size_t at = 0; at < test_y.size(); at += 500) {
      std::vector<std::size_t> idx(std::min<std::size_t>(500, test_y.size() - at));
      std::iota(idx.begin(), idx.end(), at);
      const Prediction p = predict(params, load(test_x, idx));
      for (std::size_t i = 0; i < idx.size(); ++i) correct += p.labels[i] == test_y[idx[i]];
    }
    accuracy = double(correct) / double(test_y.size());
    std::cout << "  digits epoch " << epoch << " test accuracy " << fixed(accuracy) << std::endl;
    if (accuracy >= 0.97) return verdict(true, "test accuracy " + fixed(accuracy) + " after " + std::to_string(epoch) + " epochs");
  }
  return verdict(false, "test accuracy " + fixed(accuracy) + " after 10 epochs");
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient oracle", criterion1},
      {2, "shape chain", criterion2},
      {3, "learning-rate schedule", criterion3},
      {4, "smoothing FWHM", criterion4},
      {5, "phantom experiment accuracy", criterion5},
      {6, "balanced vs imbalanced", criterion6},
      {7, "experiment determinism", criterion7},
      {8, "store integrity", criterion8},
      {9, "experiment matrix", criterion9},
      {10, "handwritten-digit sanity", criterion10},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
    failures += o.status == Outcome::Fail;
    std::cout << tag << " criterion " << c.id << " (" << c.name << "): " << o.detail << std::endl;
  }
  fs::remove_all(work_root());
  return failures == 0 ? 0 : 1;
}
