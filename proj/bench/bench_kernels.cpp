// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

// Serial reference vs OpenMP kernels on synthetic inputs.

#include <algorithm>
#include <random>

#include <benchmark/benchmark.h>

#include "classengage/kernels.hpp"

namespace ce = classengage;
namespace k = classengage::kernels;

namespace {

ce::ActionSequence random_sequence(std::mt19937_64& rng, ce::FrameIndex length, int labels, int max_segments) {
    std::uniform_int_distribution<int> lab(0, labels - 1);
    std::uniform_int_distribution<ce::FrameIndex> cut(1, length - 1);
    std::vector<ce::FrameIndex> cuts{0, length};
    for (int i = 1; i < max_segments; ++i) cuts.push_back(cut(rng));
    std::ranges::sort(cuts);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<ce::ActionSegment> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) segs.push_back({lab(rng), {cuts[i], cuts[i + 1], ce::Rational(15)}});
    return ce::ActionSequence::make("s", ce::Rational(15), std::move(segs));
}

k::LabelGrid make_peers(std::int64_t rows) {
    std::mt19937_64 rng(1);
    std::vector<ce::ActionSequence> peers;
    for (std::int64_t r = 0; r < rows; ++r) peers.push_back(random_sequence(rng, 1800, 13, 30));
    return k::make_grid(peers);
}

struct PairSet {
    std::vector<ce::ActionSequence> preds, gts;
    std::vector<k::SequencePair> pairs;
};

PairSet make_pairs(std::int64_t n) {
    std::mt19937_64 rng(2);
    PairSet s;
    for (std::int64_t i = 0; i < n; ++i) {
        s.preds.push_back(random_sequence(rng, 1800, 13, 40));
        s.gts.push_back(random_sequence(rng, 1800, 13, 10));
    }
    for (std::int64_t i = 0; i < n; ++i) s.pairs.push_back({&s.preds[i], &s.gts[i]});
    return s;
}

ce::EmbeddingBatch make_batch(std::int64_t n) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const std::size_t c = 13, d = 512;
    ce::EmbeddingBatch b{ce::Matrix(static_cast<std::size_t>(n), d), ce::Matrix(c, d), {}, 0.07};
    for (std::size_t r = 0; r < b.video.rows(); ++r)
        for (auto& x : b.video.row(r)) x = g(rng);
    for (std::size_t r = 0; r < c; ++r)
        for (auto& x : b.text.row(r)) x = g(rng);
    for (std::int64_t i = 0; i < n; ++i) b.labels.push_back(static_cast<ce::LabelId>(i % c));
    return b;
}

template <auto Fn>
void BM_bin_modes(benchmark::State& state) {
    const auto grid = make_peers(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(grid, 75, 13));
}

template <auto Fn>
void BM_evaluate_pairs(benchmark::State& state) {
    const auto set = make_pairs(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(set.pairs, {}));
}

template <auto Fn>
void BM_objective(benchmark::State& state) {
    const auto batch = make_batch(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(batch, true));
}

}  // namespace

BENCHMARK(BM_bin_modes<&k::serial::bin_modes>)->Name("bin_modes/serial")->Arg(32)->Arg(256);
BENCHMARK(BM_bin_modes<&k::parallel::bin_modes>)->Name("bin_modes/parallel")->Arg(32)->Arg(256);
BENCHMARK(BM_evaluate_pairs<&k::serial::evaluate_pairs>)->Name("evaluate_pairs/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_evaluate_pairs<&k::parallel::evaluate_pairs>)->Name("evaluate_pairs/parallel")->Arg(64)->Arg(512);
BENCHMARK(BM_objective<&k::serial::objective>)->Name("objective/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_objective<&k::parallel::objective>)->Name("objective/parallel")->Arg(64)->Arg(512);

BENCHMARK_MAIN();
