/* Copyright 2026 The ascprobe Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <vector>

#include "ascprobe/corpus.hpp"
#include "ascprobe/geometry.hpp"
#include "ascprobe/rng.hpp"
#include "ascprobe/rnn.hpp"

namespace {

using namespace ascprobe;
using geometry::Index;
using geometry::Matrix;

Matrix gaussian(Rng& rng, Index rows, Index cols, double offset_per_class, std::size_t classes,
                std::vector<std::size_t>* labels) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const std::size_t c = static_cast<std::size_t>(i) % classes;
    if (labels) labels->push_back(c);
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = rng.normal() + offset_per_class * static_cast<double>(c);
    }
  }
  return m;
}

corpus::EncodedCorpus random_rows(Rng& rng, std::size_t vocab, std::size_t rows,
                                  std::size_t len) {
  corpus::EncodedCorpus enc;
  enc.rows = rows;
  enc.max_len = len;
  enc.tokens.resize(rows * len);
  enc.mask.assign(rows * len, 1);
  for (auto& t : enc.tokens) t = static_cast<std::int32_t>(2 + rng.below(vocab - 2));
  for (std::size_t i = 0; i < rows; ++i) enc.labels.push_back(corpus::kAllConstructions[i % 4]);
  return enc;
}

void BM_Gdv(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<Index>(state.range(0));
  std::vector<std::size_t> labels;
  Matrix pts = gaussian(rng, n, 64, 0.5, 4, &labels);
  const auto set = geometry::LabeledPointSet::make(std::move(pts), std::move(labels));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::gdv(set).gdv);
}
BENCHMARK(BM_Gdv)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  rnn::ModelConfig cfg;
  cfg.vocab_size = 140;
  cfg.seed = 2;
  const rnn::ModelParams params = rnn::init_params(cfg);
  Rng rng(3);
  const auto batch = random_rows(rng, cfg.vocab_size, static_cast<std::size_t>(state.range(0)), 9);
  std::vector<std::size_t> rows(batch.rows);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rnn::loss_and_gradients(params, batch, rows).loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ClassicalMds(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<Index>(state.range(0));
  const Matrix d = geometry::pairwise_distances(gaussian(rng, n, 32, 0.0, 1, nullptr));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::classical_mds(d, 2).coords(0, 0));
}
BENCHMARK(BM_ClassicalMds)->Arg(250)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TsneIterations(benchmark::State& state) {
  Rng rng(5);
  const Matrix pts = gaussian(rng, static_cast<Index>(state.range(0)), 16, 3.0, 4, nullptr);
  geometry::TsneConfig cfg;
  cfg.perplexity = 30.0;
  cfg.iterations = 50;
  cfg.exaggeration_iters = 25;
  cfg.momentum_switch_iter = 25;
  for (auto _ : state) benchmark::DoNotOptimize(geometry::tsne(pts, cfg).coords(0, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.iterations));
}
BENCHMARK(BM_TsneIterations)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
