#include <benchmark/benchmark.h>

#include <cmath>

#include "limescope/explain.hpp"
#include "limescope/pick.hpp"
#include "limescope/rng.hpp"
#include "limescope/segment.hpp"

namespace {

using namespace limescope;

// Smooth ramp with a few flat discs, so segmenters have structure to follow.
Image scene(int size) {
  Image img(size, size, 3);
  Rng rng(1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const float t = static_cast<float>(x + y) / static_cast<float>(2 * size);
      img.at(x, y, 0) = t;
      img.at(x, y, 1) = 1.0f - t;
      img.at(x, y, 2) = 0.5f;
    }
  }
  for (int blob = 0; blob < 10; ++blob) {
    const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(size)));
    const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(size)));
    const int r = size / 16 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size / 8)));
    const float c[3] = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
    for (int y = std::max(0, cy - r); y < std::min(size, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x < std::min(size, cx + r); ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
          for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
        }
      }
    }
  }
  return img;
}

void BM_Quickshift(benchmark::State& state) {
  const Image img = scene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quickshift(img, {2.0, 100.0, 0.1}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.pixel_count()));
}
BENCHMARK(BM_Quickshift)->Arg(64)->Arg(128)->Arg(224)->Unit(benchmark::kMillisecond);

void BM_Slic(benchmark::State& state) {
  const Image img = scene(224);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(slic(img, {k, 10.0, 10, true}));
}
BENCHMARK(BM_Slic)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_FitSurrogate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  PerturbationSet set;
  set.num_features = d;
  set.design = sample_perturbations(d, 500, 3);
  Rng rng(3);
  for (std::size_t i = 0; i < set.design.size(); ++i) {
    const double y = rng.uniform();
    set.responses.push_back({1.0 - y, y});
    set.weights.push_back(rng.uniform(0.1, 1.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_surrogate(set, 1, 1.0, 10));
}
BENCHMARK(BM_FitSurrogate)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_SubmodularPick(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 200;
  Rng rng(4);
  std::vector<double> v(n * d, 0.0);
  for (double& x : v) {
    if (rng.uniform() < 0.05) x = rng.uniform();
  }
  const auto w = make_explanation_matrix(n, d, v);
  for (auto _ : state) benchmark::DoNotOptimize(submodular_pick(w, 10));
}
BENCHMARK(BM_SubmodularPick)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
