// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "inrc/bitstream.hpp"
#include "inrc/encoding.hpp"
#include "inrc/nn.hpp"
#include "inrc/quant.hpp"
#include "inrc/rng.hpp"

using namespace inrc;

namespace {

ModelConfig bench_config(int width) {
  ModelConfig cfg;
  cfg.hidden_width = width;
  cfg.frequencies = 16;
  return cfg;
}

}  // namespace

static void ForwardPass(benchmark::State& state) {
  const ModelConfig cfg = bench_config(static_cast<int>(state.range(0)));
  const ParamSet params = init_siren(cfg, 1);
  const Eigen::MatrixXd inputs = encode_inputs(make_grid(64, 64), cfg);
  for (auto _ : state) {
    auto y = forward(params, cfg, inputs);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * inputs.rows());
}
BENCHMARK(ForwardPass)->Arg(32)->Arg(64)->Arg(128);

static void LossAndGrad(benchmark::State& state) {
  const ModelConfig cfg = bench_config(static_cast<int>(state.range(0)));
  const ParamSet params = init_siren(cfg, 1);
  const Eigen::MatrixXd inputs = encode_inputs(make_grid(64, 64), cfg);
  Rng rng(2);
  Eigen::MatrixXd targets(inputs.rows(), 3);
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    targets(i / 3, i % 3) = rng.next_unit();
  for (auto _ : state) {
    auto lg = loss_and_grad(params, cfg, inputs, targets, 1e-5);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(state.iterations() * inputs.rows());
}
BENCHMARK(LossAndGrad)->Arg(32)->Arg(64);

static void MetaGradK3(benchmark::State& state) {
  const ModelConfig cfg = bench_config(16);
  const ParamSet theta0 = init_siren(cfg, 1);
  std::vector<ParamSet> alpha(3);
  for (auto& a : alpha) {
    a = zeros_like(theta0);
    for_each_tensor(a, [](auto& m) { m.setConstant(1e-5); });
  }
  const Eigen::MatrixXd inputs = encode_inputs(make_grid(32, 32), cfg);
  Rng rng(3);
  Eigen::MatrixXd targets(inputs.rows(), 3);
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    targets(i / 3, i % 3) = rng.next_unit();
  for (auto _ : state) {
    auto mg = meta_grad(theta0, alpha, cfg, inputs, targets);
    benchmark::DoNotOptimize(mg.outer_loss);
  }
}
BENCHMARK(MetaGradK3);

static void EntropyEncode(benchmark::State& state) {
  Rng rng(4);
  std::vector<std::uint32_t> codes(static_cast<std::size_t>(state.range(0)));
  for (auto& c : codes)
    c = static_cast<std::uint32_t>(128 + 20 * rng.next_normal()) & 0xFF;
  const CodeTensorView view{codes, 8};
  for (auto _ : state) {
    auto bytes = encode_codes({&view, 1});
    benchmark::DoNotOptimize(bytes.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(EntropyEncode)->Arg(1 << 12)->Arg(1 << 16);

static void QuantizeDequantize(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (auto& v : values) v = rng.next_uniform(-1, 1);
  const QuantGrid grid = fit_grid(values, 8);
  for (auto _ : state) {
    auto codes = quantize(values, grid);
    auto back = dequantize(codes, grid);
    benchmark::DoNotOptimize(back.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(QuantizeDequantize)->Arg(1 << 14);

BENCHMARK_MAIN();
