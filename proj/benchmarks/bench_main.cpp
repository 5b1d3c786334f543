#include <benchmark/benchmark.h>

#include "dippas/dip.hpp"
#include "dippas/fingerprint.hpp"
#include "dippas/nn/generator.hpp"
#include "dippas/nn/layers.hpp"
#include "dippas/rng.hpp"

using namespace dippas;

namespace {

nn::Tensor<float> noise_tensor(std::size_t c, std::size_t h, std::size_t w) {
  nn::Tensor<float> t(c, h, w);
  std::vector<double> v(t.size());
  Rng rng(7);
  fill_gaussian(v, 0.0, 1.0, rng);
  for (std::size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<float>(v[i]);
  return t;
}

RasterImage noise_image(std::size_t side) {
  const Shape s{side, side, 3};
  std::vector<double> v(s.size());
  Rng rng(3);
  fill_uniform(v, 0.0, 1.0, rng);
  return RasterImage(s, std::move(v));
}

void BM_ConvForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto ch = static_cast<std::size_t>(state.range(1));
  nn::Conv2d<float> conv("c", ch, ch, 3, 1, false);
  Rng rng(1);
  conv.init(rng);
  const auto x = noise_tensor(ch, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_ConvForward)->Args({64, 16})->Args({128, 16})->Args({128, 32})->Unit(benchmark::kMicrosecond);

void BM_ConvBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto ch = static_cast<std::size_t>(state.range(1));
  nn::Conv2d<float> conv("c", ch, ch, 3, 1, false);
  Rng rng(1);
  conv.init(rng);
  const auto x = noise_tensor(ch, side, side);
  const auto y = conv.forward(x);
  const auto g = noise_tensor(ch, y.height, y.width);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(g));
}
BENCHMARK(BM_ConvBackward)->Args({64, 16})->Args({128, 16})->Args({128, 32})->Unit(benchmark::kMicrosecond);

void BM_GeneratorStep(benchmark::State& state) {
  nn::GeneratorConfig c;
  c.depth = static_cast<std::size_t>(state.range(1));
  c.base_features = 16;
  nn::Generator<float> gen(c, 0);
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto z = noise_tensor(3, side, side);
  const auto g = noise_tensor(3, side, side);
  for (auto _ : state) {
    gen.zero_grad();
    benchmark::DoNotOptimize(gen.forward(z));
    gen.backward(g);
  }
}
BENCHMARK(BM_GeneratorStep)->Args({64, 2})->Args({128, 2})->Unit(benchmark::kMillisecond);

void BM_Denoise(benchmark::State& state) {
  const auto im = noise_image(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(denoise(im));
}
BENCHMARK(BM_Denoise)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& state) {
  const auto im = noise_image(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_noise_residual(im));
}
BENCHMARK(BM_Residual)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
