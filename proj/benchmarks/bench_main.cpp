#include <benchmark/benchmark.h>

#include <random>

#include "gmfp/contrastive.hpp"
#include "gmfp/fingerprint.hpp"
#include "gmfp/optimizer.hpp"
#include "gmfp/set_encoder.hpp"
#include "gmfp/synth_zoo.hpp"

namespace {

using gmfp::ad::Tensor;

Tensor<float> noise(gmfp::ad::Shape shape, std::uint64_t seed, bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 0.1f);
  std::vector<float> values(gmfp::ad::numel(shape));
  for (float& v : values) v = gauss(rng);
  return Tensor<float>::from(std::move(shape), std::move(values), requires_grad);
}

// First encoder layer on a 32x32 batch.
void BM_Conv2dForward(benchmark::State& state) {
  const std::size_t batch = state.range(0);
  const auto x = noise({batch, 1, 32, 32}, 1);
  const auto w = noise({8, 1, 3, 3}, 2);
  const auto b = noise({8}, 3);
  for (auto _ : state) {
    gmfp::ad::NoGradGuard guard;
    benchmark::DoNotOptimize(gmfp::ad::conv2d(x, w, b, {.stride = 2, .pad = 1}).data().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2dForward)->Arg(32)->Arg(256);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto x = noise({64, 8, 16, 16}, 1, true);
  const auto w = noise({16, 8, 3, 3}, 2, true);
  const auto b = noise({16}, 3, true);
  for (auto _ : state) {
    auto y = gmfp::ad::sum(gmfp::ad::conv2d(x, w, b, {.stride = 2, .pad = 1}));
    y.backward();
  }
}
BENCHMARK(BM_Conv2dBackward);

void BM_EncoderForward(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const gmfp::SetEncoder<float> encoder(gmfp::EncoderConfig{}, 0);
  const auto x = noise({8 * n, 1, 32, 32}, 4);
  for (auto _ : state) {
    gmfp::ad::NoGradGuard guard;
    benchmark::DoNotOptimize(encoder.forward(x, 8).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * n);
}
BENCHMARK(BM_EncoderForward)->Arg(1)->Arg(32);

// One default training step: P=4 models x K=2 bags of n=32 images.
void BM_TrainStep(benchmark::State& state) {
  const gmfp::SetEncoder<float> encoder(gmfp::EncoderConfig{}, 0);
  gmfp::ad::Adam<float> optimizer(encoder.parameters());
  const auto x = noise({8 * 32, 1, 32, 32}, 5);
  const std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2, 3, 3};
  for (auto _ : state) {
    auto loss = gmfp::contrastive_batch_loss(encoder.forward(x, labels.size()), labels);
    loss.backward();
    optimizer.step();
    optimizer.zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto spec = gmfp::zoo::build_zoo({}).models.front();
  const auto image = gmfp::zoo::sample_image(spec, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gmfp::residual(image).pixels.data());
}
BENCHMARK(BM_Residual);

}  // namespace

BENCHMARK_MAIN();
