#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "typeblend/blend.hpp"
#include "typeblend/priors.hpp"
#include "typeblend/spectrum.hpp"
#include "typeblend/vector.hpp"

using namespace typeblend;

namespace {

Image noisy_blocks(int w, int h) {
  static const Rgb colors[] = {{200, 40, 40}, {40, 160, 60}, {30, 60, 200}, {240, 220, 60}, {20, 20, 20}};
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> jitter(-6, 6);
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb c = colors[(x * 5) / w];
      auto j = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + jitter(rng), 0, 255)); };
      img.set(x, y, {j(c.r), j(c.g), j(c.b)});
    }
  return img;
}

Image shapes(int side) {
  Image img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double dx = x - side * 0.35, dy = y - side * 0.5;
      if (dx * dx + dy * dy < side * side * 0.06) img.set(x, y, {200, 40, 40});
      else if (x > side * 0.6 && x < side * 0.9 && y > side * 0.2 && y < side * 0.8) img.set(x, y, {30, 90, 200});
    }
  return img;
}

std::vector<Ring> star(int points) {
  Ring r;
  for (int i = 0; i < 2 * points; ++i) {
    const double a = i * std::numbers::pi / points;
    const double rad = i % 2 ? 20.0 : 45.0;
    r.push_back({100 + rad * std::cos(a), 100 - rad * std::sin(a)});
  }
  return {r};
}

}  // namespace

static void BM_KMeansPalette(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Image img = noisy_blocks(side, side);
  const Mask all(side, side, true);
  for (auto _ : state) benchmark::DoNotOptimize(priors::extract_colors(img, all));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_KMeansPalette)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_MeanValueCoordinates(benchmark::State& state) {
  const auto cage = priors::rectangle_cage({{50, 50}, {150, 150}});
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(55, 145);
  std::vector<Vec2> pts(1024);
  for (auto& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state)
    for (const auto& p : pts) benchmark::DoNotOptimize(priors::mean_value_coordinates(p, cage));
  state.SetItemsProcessed(state.iterations() * pts.size());
}
BENCHMARK(BM_MeanValueCoordinates);

static void BM_CageDeformation(benchmark::State& state) {
  const auto outlines = star(static_cast<int>(state.range(0)));
  const auto target = priors::sample_ring(priors::rectangle_cage({{40, 40}, {160, 160}}), priors::kContourPoints);
  for (auto _ : state)
    benchmark::DoNotOptimize(priors::deform_outlines_to(outlines, target, 5, priors::TargetFit::fit_to_cage));
}
BENCHMARK(BM_CageDeformation)->Arg(5)->Arg(50)->Arg(500);

static void BM_Vectorize(benchmark::State& state) {
  const Image img = shapes(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vector::vectorize(img));
}
BENCHMARK(BM_Vectorize)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_Aggregate(benchmark::State& state) {
  std::vector<blend::ScoreSet> sets(16);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& s : sets) s = {u(rng), u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(blend::aggregate(sets));
}
BENCHMARK(BM_Aggregate);

static void BM_SpectrumQuantize(benchmark::State& state) {
  double raw = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spectrum::quantize(spectrum::display_from_raw(raw)));
    raw = raw + 1e-3 > 1.0 ? 0.0 : raw + 1e-3;
  }
}
BENCHMARK(BM_SpectrumQuantize);
BENCHMARK_MAIN();
