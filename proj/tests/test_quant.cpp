// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "inrc/encoding.hpp"
#include "inrc/quant.hpp"
#include "inrc/rng.hpp"
#include "testutil.hpp"

using namespace inrc;

namespace {

// Exhaustive rounding oracle for a single-output layer with few weights:
// tries every floor/ceil pattern and returns the best layer MSE.
double exhaustive_best_mse(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x,
                           const QuantGrid& grid) {
  const int n = static_cast<int>(w.size());
  const Eigen::MatrixXd ref = x * w.transpose();
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << n); ++mask) {
    Eigen::MatrixXd wq = w;
    for (int i = 0; i < n; ++i) {
      const double t = (w(0, i) - grid.min_value) / grid.step;
      double f = std::clamp(std::floor(t), 0.0, double(grid.max_code()));
      double code = f + ((mask >> i) & 1);
      code = std::min(code, double(grid.max_code()));
      wq(0, i) = grid.dequant(static_cast<std::uint32_t>(code));
    }
    best = std::min(best, (x * wq.transpose() - ref).squaredNorm() /
                              static_cast<double>(ref.size()));
  }
  return best;
}

double adaround_mse(const std::vector<std::uint32_t>& codes,
                    const Eigen::MatrixXd& w, const Eigen::MatrixXd& x,
                    const QuantGrid& grid) {
  Eigen::MatrixXd wq = w;
  for (int i = 0; i < static_cast<int>(w.size()); ++i)
    wq(0, i) = grid.dequant(codes[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd ref = x * w.transpose();
  return (x * wq.transpose() - ref).squaredNorm() /
         static_cast<double>(ref.size());
}

}  // namespace

TEST_SUITE("quant") {

TEST_CASE("grid fit on [-1,1] at 3 bits") {
  std::vector<double> v = {-1.0, -0.5, 0.0, 0.3, 1.0};
  const QuantGrid g = fit_grid(v, 3);
  CHECK(g.min_value == -1.0);
  CHECK(g.step == doctest::Approx(2.0 / 7.0).epsilon(1e-7));
  CHECK(g.levels() == 8);
}

TEST_CASE("constant tensors degenerate to exact reconstruction") {
  std::vector<double> v(37, 0.5);
  const QuantGrid g = fit_grid(v, 8);
  CHECK(g.step == 1.0);
  const auto codes = quantize(v, g);
  for (auto c : codes) CHECK(c == 0);
  const auto back = dequantize(codes, g);
  for (double x : back) CHECK(x == 0.5);
}

TEST_CASE("grid endpoints map to the first and last code") {
  std::vector<double> v = {-0.75, -0.1, 0.2, 0.6};
  const QuantGrid g = fit_grid(v, 4);
  const auto codes = quantize(v, g);
  CHECK(codes.front() == 0);
  CHECK(codes.back() == g.max_code());
}

TEST_CASE("values on grid points round-trip exactly") {
  QuantGrid g;
  g.min_value = -0.25;
  g.step = 0.03125;  // exactly representable
  g.bitwidth = 5;
  std::vector<double> v;
  for (std::uint32_t c = 0; c < g.levels(); ++c) v.push_back(g.dequant(c));
  const auto codes = quantize(v, g);
  for (std::uint32_t c = 0; c < g.levels(); ++c) CHECK(codes[c] == c);
  const auto back = dequantize(codes, g);
  for (std::uint32_t c = 0; c < g.levels(); ++c) CHECK(back[c] == v[c]);
}

TEST_CASE("nearest rounding is half-to-even") {
  QuantGrid g;
  g.min_value = 0.0;
  g.step = 1.0;
  g.bitwidth = 3;
  const std::vector<double> v = {0.5, 1.5, 2.5, 3.5};
  const auto codes = quantize(v, g);
  CHECK(codes[0] == 0);
  CHECK(codes[1] == 2);
  CHECK(codes[2] == 2);
  CHECK(codes[3] == 4);
}

TEST_CASE("Monte Carlo: error bound and the step^2/12 variance law") {
  Rng rng(404);
  std::vector<double> v(10000);
  for (auto& x : v) x = rng.next_unit();
  v[0] = 0.0;
  v[1] = 1.0;
  const QuantGrid g = fit_grid(v, 6);
  const auto codes = quantize(v, g);
  const auto back = dequantize(codes, g);
  double max_err = 0.0, sq_acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = std::abs(v[i] - back[i]);
    max_err = std::max(max_err, e);
    sq_acc += e * e;
  }
  CHECK(max_err <= g.step / 2.0 + 1e-9);
  const double mean_sq = sq_acc / static_cast<double>(v.size());
  CHECK(mean_sq == doctest::Approx(g.step * g.step / 12.0).epsilon(0.05));
}

TEST_CASE("bitwidth contract") {
  std::vector<double> v = {0.0, 1.0};
  CHECK_THROWS_AS((void)fit_grid(v, 1), ContractError);
  CHECK_THROWS_AS((void)fit_grid(v, 17), ContractError);
  CHECK_THROWS_AS((void)fit_grid(std::vector<double>{}, 8), ContractError);
}

}  // TEST_SUITE("quant")

TEST_SUITE("adaround") {

TEST_CASE("weights already on the grid reproduce nearest rounding") {
  QuantGrid g;
  g.min_value = -0.5;
  g.step = 0.0625;
  g.bitwidth = 4;
  Eigen::MatrixXd w(1, 3);
  w << g.dequant(2), g.dequant(7), g.dequant(11);
  Rng rng(5);
  Eigen::MatrixXd x(16, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i / 3, i % 3) = rng.next_uniform(-1, 1);
  AdaRoundConfig cfg;
  cfg.iters = 200;
  const auto codes = adaround(w, x, g, cfg);
  CHECK(codes == quantize(flatten_row_major(w), g));
}

TEST_CASE("iters = 0 returns nearest rounding") {
  Rng rng(6);
  Eigen::MatrixXd w(2, 4);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w(i / 4, i % 4) = rng.next_uniform(-1, 1);
  const QuantGrid g = fit_grid(flatten_row_major(w), 4);
  Eigen::MatrixXd x(8, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i / 4, i % 4) = rng.next_uniform(-1, 1);
  AdaRoundConfig cfg;
  cfg.iters = 0;
  CHECK(adaround(w, x, g, cfg) == quantize(flatten_row_major(w), g));
}

TEST_CASE("a huge regularizer collapses the soft values to {0,1}") {
  Rng rng(7);
  Eigen::MatrixXd w(1, 6);
  for (Eigen::Index i = 0; i < 6; ++i) w(0, i) = rng.next_uniform(-1, 1);
  const QuantGrid g = fit_grid(flatten_row_major(w), 3);
  Eigen::MatrixXd x(32, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x(i / 6, i % 6) = rng.next_uniform(-1, 1);
  AdaRoundConfig cfg;
  cfg.iters = 400;
  cfg.reg_lambda = 1e6;
  AdaRoundDiag diag;
  (void)adaround(w, x, g, cfg, &diag);
  // The soft solution saturates, so the hard threshold is a no-op and the
  // soft and thresholded layer errors coincide.
  for (double h : diag.final_h) CHECK((h == 0.0 || h == 1.0));
  CHECK(!diag.fell_back);
}

TEST_CASE("matches the exhaustive oracle on 3-weight layers") {
  int wins = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(1000 + trial);
    Eigen::MatrixXd w(1, 3);
    for (int i = 0; i < 3; ++i) w(0, i) = rng.next_uniform(-1, 1);
    Eigen::MatrixXd x(24, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x(i / 3, i % 3) = rng.next_uniform(-1, 1);
    const QuantGrid g = fit_grid(flatten_row_major(w), 3);
    AdaRoundConfig cfg;
    cfg.iters = 600;
    const auto codes = adaround(w, x, g, cfg);
    const double got = adaround_mse(codes, w, x, g);
    const double best = exhaustive_best_mse(w, x, g);
    if (got <= best + 1e-12) ++wins;
  }
  CHECK(wins >= 19);
}

}  // TEST_SUITE("adaround")

TEST_SUITE("qat") {

TEST_CASE("lr = 0 leaves the codes unchanged") {
  ModelConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 4;
  cfg.frequencies = 2;
  const ParamSet p = init_siren(cfg, 11);
  const Eigen::MatrixXd x = encode_inputs(make_grid(6, 6), cfg);
  const Eigen::MatrixXd t = image_to_targets(test::toy_image(6, 6, 31));
  const QuantizedParams qp = quantize_params(p, 6);
  QatConfig qcfg;
  qcfg.epochs = 10;
  qcfg.lr = 0.0;
  const QatResult res = qat(qp, cfg, x, t, qcfg);
  for (std::size_t i = 0; i < qp.tensors.size(); ++i)
    CHECK(res.qparams.tensors[i].codes == qp.tensors[i].codes);
  CHECK(res.mse_after == res.mse_before);
}

TEST_CASE("best checkpoint never regresses the instance MSE") {
  ModelConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  cfg.frequencies = 4;
  const Eigen::MatrixXd x = encode_inputs(make_grid(12, 12), cfg);
  const Eigen::MatrixXd t = image_to_targets(test::toy_image(12, 12, 51));
  OverfitConfig ocfg;
  ocfg.epochs = 300;
  ocfg.lr0 = 5e-3;
  ocfg.l1_lambda = 0.0;
  const auto fit = overfit(x, t, cfg, init_siren(cfg, 2), ocfg);
  const QuantizedParams qp = quantize_params(fit.params, 4);
  QatConfig qcfg;
  qcfg.epochs = 60;
  qcfg.lr = 1e-4;
  const QatResult res = qat(qp, cfg, x, t, qcfg);
  CHECK(res.mse_after <= res.mse_before);
  CHECK(!res.diverged);
}

TEST_CASE("delta mode with all-zero deltas equals the theta0 forward") {
  ModelConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 5;
  cfg.frequencies = 3;
  const ParamSet theta0 = init_siren(cfg, 21);
  ParamSet delta = zeros_like(theta0);
  delta.role = ParamRole::delta;
  const QuantizedParams qd = quantize_params(delta, 7, QuantMode::delta);
  const ParamSet back = dequantize_params(qd, cfg);
  ParamSet sum = theta0;
  axpy(sum, 1.0, back);
  const Eigen::MatrixXd x = encode_inputs(make_grid(5, 5), cfg);
  const Eigen::MatrixXd ya = forward(sum, cfg, x);
  const Eigen::MatrixXd yb = forward(theta0, cfg, x);
  CHECK((ya - yb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("param round trip preserves shapes and tensor order") {
  ModelConfig cfg;
  cfg.hidden_layers = 3;
  cfg.hidden_width = 6;
  cfg.frequencies = 2;
  const ParamSet p = init_siren(cfg, 77);
  const QuantizedParams qp = quantize_params(p, 8);
  CHECK(qp.tensors.size() == p.tensor_count());
  const ParamSet back = dequantize_params(qp, cfg);
  CHECK(back.same_shape(p));
  // Re-quantizing the dequantized tensors is the identity on codes.
  const QuantizedParams again = requantize(back, qp);
  for (std::size_t i = 0; i < qp.tensors.size(); ++i)
    CHECK(again.tensors[i].codes == qp.tensors[i].codes);
}

}  // TEST_SUITE("qat")
