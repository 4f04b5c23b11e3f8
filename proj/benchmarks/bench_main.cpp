// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "layerlock/autodiff/adam.hpp"
#include "layerlock/harness/training.hpp"
#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/sampling.hpp"
#include "layerlock/theory/attention_layer.hpp"
#include "layerlock/toymodel/decoder.hpp"

namespace {

using namespace layerlock;

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = normal_sample(n, n, rng);
  const Matrix b = normal_sample(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(256);

void BM_PhiLayer(benchmark::State& state) {
  Rng rng(2);
  const Matrix x = normal_sample(8, 16, rng);
  const auto p = theory::AttnParams::random_bounded(16, 4, 0.1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(theory::phi_layer(x, p));
}
BENCHMARK(BM_PhiLayer);

// One forward/backward/Adam step of the toy decoder at batch 64.
void BM_DecoderStep(benchmark::State& state) {
  const toymodel::DecoderConfig cfg{.vocab = 16, .d_model = 32, .layers = 6, .seq_len = 16};
  Rng rng(3);
  auto params = toymodel::DecoderParams::xavier(cfg, rng);
  const auto specs = harness::default_specs(cfg.vocab, cfg.seq_len);
  Rng drng(4);
  const auto data = taskgen::generate_mixture(specs, 64, drng);
  const auto batch = data.all();
  autodiff::AdamState adam({.lr = 1e-3}, params.tensors);
  for (auto _ : state) {
    autodiff::Tape tape;
    const auto fwd = toymodel::forward(tape, params, batch);
    tape.backward(autodiff::cross_entropy(*fwd.logits, data.targets));
    std::vector<const Matrix*> grads;
    for (const auto& v : fwd.params) grads.push_back(&v.grad());
    adam.step(params.tensors, grads);
  }
}
BENCHMARK(BM_DecoderStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
