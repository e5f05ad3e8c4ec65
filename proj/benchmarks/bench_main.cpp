// Microbenchmarks for the per-sample hot paths: feature extraction, fused
// forward/backward passes, and exemplar herding.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "cilfuse/exemplar.hpp"
#include "cilfuse/fusion.hpp"
#include "cilfuse/image.hpp"
#include "cilfuse/losses.hpp"
#include "cilfuse/rng.hpp"
#include "cilfuse/streams.hpp"

namespace {

cilfuse::Image noise_image(int side, std::uint32_t seed) {
  cilfuse::Image img = cilfuse::Image::filled(side, side, 0, 0, 0);
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  for (std::uint8_t& b : img.pixels) b = static_cast<std::uint8_t>(byte(gen));
  return img;
}

void BM_ColorHistogram(benchmark::State& state) {
  const cilfuse::Image img = noise_image(static_cast<int>(state.range(0)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(cilfuse::color_histogram(img, true));
}
BENCHMARK(BM_ColorHistogram)->Arg(32)->Arg(64);

void BM_EdgeHistogram(benchmark::State& state) {
  const cilfuse::Image img = noise_image(static_cast<int>(state.range(0)), 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(cilfuse::edge_histogram(img, true));
}
BENCHMARK(BM_EdgeHistogram)->Arg(32)->Arg(64);

void BM_RgbThumb(benchmark::State& state) {
  const cilfuse::Image img = noise_image(static_cast<int>(state.range(0)), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(cilfuse::rgb_stream(img, 16));
}
BENCHMARK(BM_RgbThumb)->Arg(32)->Arg(64);

void BM_ExtractAllStreams(benchmark::State& state) {
  const cilfuse::Image img = noise_image(32, 4);
  cilfuse::StreamExtractor extractor;
  extractor.streams = {cilfuse::StreamId::rgb, cilfuse::StreamId::color_hist,
                       cilfuse::StreamId::edge_hist};
  for (auto _ : state) benchmark::DoNotOptimize(extractor.extract(img));
}
BENCHMARK(BM_ExtractAllStreams);

// Three-task model at the default desk scale: rgb thumbnail (768) plus color
// histogram (512), 64-wide projections and trunk.
cilfuse::FusionModel desk_model(cilfuse::FusionMode mode) {
  cilfuse::FusionConfig cfg;
  cfg.mode = mode;
  cfg.streams = {cilfuse::StreamId::rgb, cilfuse::StreamId::color_hist};
  cfg.stream_dims = {768, 512};
  cfg.proj_dim = 64;
  cfg.trunk_dims = {64};
  cilfuse::FusionModel model(cfg);
  model.grow_for_task({0, 1, 2, 3}, 1);
  model.grow_for_task({4, 5, 6, 7}, 1);
  model.grow_for_task({8, 9, 10, 11}, 1);
  return model;
}

cilfuse::StreamSet desk_streams() {
  cilfuse::Rng rng(9);
  cilfuse::StreamSet streams;
  for (int dim : {768, 512}) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.uniform(0.0, 1.0);
    streams.push_back(std::move(v));
  }
  return streams;
}

void BM_Forward(benchmark::State& state) {
  const cilfuse::FusionMode mode = state.range(0) == 0
                                       ? cilfuse::FusionMode::early
                                       : cilfuse::FusionMode::intermediate;
  const cilfuse::FusionModel model = desk_model(mode);
  const cilfuse::StreamSet streams = desk_streams();
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(streams));
  state.SetLabel(cilfuse::fusion_mode_name(mode));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1);

void BM_ForwardBackward(benchmark::State& state) {
  const cilfuse::FusionMode mode = state.range(0) == 0
                                       ? cilfuse::FusionMode::early
                                       : cilfuse::FusionMode::intermediate;
  cilfuse::FusionModel model = desk_model(mode);
  const cilfuse::StreamSet streams = desk_streams();
  for (auto _ : state) {
    model.zero_grads();
    const cilfuse::ForwardTrace trace = model.forward(streams);
    const cilfuse::LossResult loss = cilfuse::cross_entropy(trace.logits, 5);
    model.backward(trace, loss.grad);
    benchmark::DoNotOptimize(model);
  }
  state.SetLabel(cilfuse::fusion_mode_name(mode));
}
BENCHMARK(BM_ForwardBackward)->Arg(0)->Arg(1);

void BM_HerdingSelection(benchmark::State& state) {
  const int candidates = static_cast<int>(state.range(0));
  std::vector<int> ids(static_cast<std::size_t>(candidates));
  std::vector<std::vector<double>> features(
      static_cast<std::size_t>(candidates));
  cilfuse::Rng rng(11);
  for (int i = 0; i < candidates; ++i) {
    ids[static_cast<std::size_t>(i)] = i;
    std::vector<double> f(64);
    for (double& x : f) x = rng.uniform(-1.0, 1.0);
    features[static_cast<std::size_t>(i)] = std::move(f);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(cilfuse::select_exemplars(
        ids, features, candidates / 2, cilfuse::SelectionPolicy::herding, 1));
}
BENCHMARK(BM_HerdingSelection)->Arg(40)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
