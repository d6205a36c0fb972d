#include <benchmark/benchmark.h>

#include <vector>

#include "adcnn/layers.hpp"
#include "adcnn/lenet.hpp"
#include "adcnn/phantom.hpp"
#include "adcnn/pipeline.hpp"
#include "adcnn/rng.hpp"
#include "adcnn/sgd.hpp"
#include "adcnn/volume.hpp"

using namespace adcnn;

namespace {

Tensor noise(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

}  // namespace

// Per sample; the network loops these over the batch.
static void BM_conv1_forward(benchmark::State& state) {
  const Tensor x = noise({1, 28, 28}, 1);
  const Tensor w = noise({20, 1, 5, 5}, 2);
  const Tensor b = noise({20}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, w, b));
}
BENCHMARK(BM_conv1_forward);

static void BM_conv2_backward(benchmark::State& state) {
  const Tensor x = noise({20, 12, 12}, 4);
  const ConvKernel<float> k{noise({50, 20, 5, 5}, 5), noise({50}, 6)};
  const Tensor g = noise({50, 8, 8}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, k, g));
}
BENCHMARK(BM_conv2_backward);

// One SGD iteration at batch 64: forward, backward, update.
static void BM_train_step(benchmark::State& state) {
  auto params = init_params<float>(LayerSpec::lenet5(), 1);
  auto velocity = zeros_like(params);
  const Tensor x = noise({64, 1, 28, 28}, 8);
  std::vector<std::size_t> labels(64);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const SgdConfig sgd;
  std::uint64_t it = 0;
  for (auto _ : state) {
    const auto g = backward(params, forward(params, x), labels);
    sgd_step(params, g.gradients, velocity, sgd, it++);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_train_step)->Unit(benchmark::kMillisecond);

static void BM_smooth3d(benchmark::State& state) {
  PhantomConfig c;
  c.subjects_ad = 1;
  c.subjects_nc = 0;
  c.nx = c.ny = c.nz = static_cast<std::size_t>(state.range(0));
  const Volume3D v = generate_phantoms(c).front();
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_smooth3d(v, 3.0));
}
BENCHMARK(BM_smooth3d)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_build_variant(benchmark::State& state) {
  PhantomConfig c;
  c.subjects_ad = 2;
  c.subjects_nc = 2;
  const auto vols = generate_phantoms(c);
  const int variant = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(vols, variant));
}
BENCHMARK(BM_build_variant)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
