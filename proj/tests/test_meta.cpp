// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "inrc/encoding.hpp"
#include "inrc/meta.hpp"
#include "testutil.hpp"

using namespace inrc;

namespace {

ModelConfig meta_cfg() {
  ModelConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  cfg.frequencies = 4;
  return cfg;
}

MetaTrainConfig quick_mcfg() {
  MetaTrainConfig m;
  m.outer_lr = 5e-3;
  m.inner_steps = 2;
  m.steps_per_val = 50;
  m.val_size = 4;
  m.epochs = 200;  // dataset of one image -> 200 outer steps
  m.seed = 7;
  return m;
}

}  // namespace

TEST_SUITE("meta") {

TEST_CASE("one constant image: 200 outer steps beat the start by 10x") {
  const std::vector<ImageF> data = {test::constant_image(8, 8, 0.35)};
  const ModelConfig cfg = meta_cfg();
  const MetaTrainConfig mcfg = quick_mcfg();

  // Baseline: post-inner-loop MSE before any outer training.
  const Eigen::MatrixXd x = encode_inputs(make_grid(8, 8), cfg);
  const Eigen::MatrixXd t = image_to_targets(data[0]);
  ParamSet theta0 = init_siren(cfg, Rng(mcfg.seed).fork(0x696e6974));
  std::vector<ParamSet> alpha0(mcfg.inner_steps);
  for (auto& a : alpha0) {
    a = zeros_like(theta0);
    for_each_tensor(a, [&](auto& m) { m.setConstant(mcfg.alpha_init); });
  }
  const ParamSet phi = inner_loop(theta0, alpha0, cfg, x, t);
  const double initial =
      (forward(phi, cfg, x) - t).squaredNorm() / static_cast<double>(x.rows());

  const TrainInitResult res = train_init(data, data, mcfg, cfg, "unit");
  CHECK(res.best_val_loss < initial / 10.0);
  CHECK(res.steps_run == 200);
}

TEST_CASE("training is bit-deterministic in the seed") {
  const std::vector<ImageF> data = {test::toy_image(8, 8, 1),
                                    test::toy_image(8, 8, 2)};
  MetaTrainConfig mcfg = quick_mcfg();
  mcfg.epochs = 10;
  const ModelConfig cfg = meta_cfg();
  const auto a = train_init(data, data, mcfg, cfg, "unit");
  const auto b = train_init(data, data, mcfg, cfg, "unit");
  CHECK(a.init.content_hash() == b.init.content_hash());
  CHECK(a.val_losses == b.val_losses);
}

TEST_CASE("k inner steps alone already reduce in-distribution MSE") {
  // Train a quick init on a small family, then check that the warm start
  // beats the raw theta0 on fresh family members before any Adam epochs.
  std::vector<ImageF> family;
  for (int i = 0; i < 24; ++i) family.push_back(test::toy_image(8, 8, 400 + i));
  MetaTrainConfig mcfg = quick_mcfg();
  mcfg.inner_steps = 3;
  mcfg.epochs = 8;
  mcfg.steps_per_val = 64;
  const ModelConfig cfg = meta_cfg();
  const auto res = train_init(family, family, mcfg, cfg, "unit");

  const Eigen::MatrixXd x = encode_inputs(make_grid(8, 8), cfg);
  int wins = 0;
  for (int i = 0; i < 6; ++i) {
    const Eigen::MatrixXd t = image_to_targets(test::toy_image(8, 8, 900 + i));
    const double before =
        (forward(res.init.theta0, cfg, x) - t).squaredNorm() / x.rows();
    const ParamSet phi = inner_loop(res.init.theta0, res.init.alpha, cfg, x, t);
    const double after = (forward(phi, cfg, x) - t).squaredNorm() / x.rows();
    if (after < before) ++wins;
  }
  CHECK(wins >= 5);
}

TEST_CASE("returned init has the best logged validation loss") {
  const std::vector<ImageF> data = {test::toy_image(8, 8, 3),
                                    test::toy_image(8, 8, 4),
                                    test::toy_image(8, 8, 5)};
  MetaTrainConfig mcfg = quick_mcfg();
  mcfg.epochs = 30;
  mcfg.steps_per_val = 15;
  const auto res = train_init(data, data, mcfg, meta_cfg(), "unit");
  REQUIRE(!res.val_losses.empty());
  for (double v : res.val_losses) CHECK(res.best_val_loss <= v);
}

TEST_CASE("zero alpha makes overfit_meta equal plain overfit from theta0") {
  const ModelConfig cfg = meta_cfg();
  MetaInit minit;
  minit.config = cfg;
  minit.theta0 = init_siren(cfg, 41);
  minit.alpha.resize(1);
  minit.alpha[0] = zeros_like(minit.theta0);

  const Eigen::MatrixXd x = encode_inputs(make_grid(8, 8), cfg);
  const Eigen::MatrixXd t = image_to_targets(test::toy_image(8, 8, 6));
  OverfitConfig ocfg;
  ocfg.epochs = 60;
  ocfg.l1_lambda = 1e-5;
  ocfg.warmup_epochs = 10;

  const auto meta = overfit_meta(x, t, minit, ocfg);
  const auto plain = overfit(x, t, cfg, minit.theta0, ocfg, &minit.theta0);
  CHECK(meta.fit.trace == plain.trace);
  for (std::size_t l = 0; l < plain.params.layers.size(); ++l)
    CHECK(meta.fit.params.layers[l].W == plain.params.layers[l].W);
}

TEST_CASE("theta0 + delta reconstructs theta_star bit-exactly") {
  const ModelConfig cfg = meta_cfg();
  MetaInit minit;
  minit.config = cfg;
  minit.theta0 = init_siren(cfg, 43);
  minit.alpha.resize(2);
  for (auto& a : minit.alpha) {
    a = zeros_like(minit.theta0);
    for_each_tensor(a, [](auto& m) { m.setConstant(1e-4); });
  }
  const Eigen::MatrixXd x = encode_inputs(make_grid(8, 8), cfg);
  const Eigen::MatrixXd t = image_to_targets(test::toy_image(8, 8, 7));
  OverfitConfig ocfg;
  ocfg.epochs = 40;
  const auto res = overfit_meta(x, t, minit, ocfg);
  ParamSet sum = minit.theta0;
  axpy(sum, 1.0, res.delta);
  for (std::size_t l = 0; l < sum.layers.size(); ++l) {
    CHECK(sum.layers[l].W == res.theta_star.layers[l].W);
    CHECK(sum.layers[l].b == res.theta_star.layers[l].b);
  }
}

TEST_CASE("init files round-trip bit-exactly and verify their hash") {
  const ModelConfig cfg = meta_cfg();
  MetaInit minit;
  minit.config = cfg;
  minit.theta0 = init_siren(cfg, 47);
  minit.alpha.resize(3);
  Rng rng(48);
  for (auto& a : minit.alpha) {
    a = zeros_like(minit.theta0);
    for_each_tensor(a, [&](auto& m) {
      m = m.unaryExpr([&](double) { return rng.next_uniform(-1e-4, 1e-3); });
    });
  }
  minit.provenance_dataset = "toy-family-v1";
  minit.provenance_steps = 12345;

  const auto bytes = serialize_init(minit);
  const MetaInit back = parse_init(bytes);
  CHECK(serialize_init(back) == bytes);
  CHECK(back.content_hash() == minit.content_hash());
  CHECK(back.provenance_dataset == "toy-family-v1");
  CHECK(back.provenance_steps == 12345);
  for (std::size_t l = 0; l < minit.theta0.layers.size(); ++l)
    CHECK(back.theta0.layers[l].W == minit.theta0.layers[l].W);

  // Tensor corruption trips the stored hash.
  auto bad = bytes;
  bad[bad.size() - 5] ^= 0x10;
  CHECK_THROWS_AS((void)parse_init(bad), HashMismatchError);
}

TEST_CASE("registry finds inits by content hash") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "inrc_test_registry";
  fs::create_directories(dir);
  const ModelConfig cfg = meta_cfg();
  MetaInit minit;
  minit.config = cfg;
  minit.theta0 = init_siren(cfg, 51);
  minit.alpha.resize(1);
  minit.alpha[0] = zeros_like(minit.theta0);
  save_init(minit, (dir / "a.inri").string());

  InitRegistry reg(dir.string());
  const MetaInit found = reg.find(minit.content_hash());
  CHECK(found.content_hash() == minit.content_hash());

  Digest128 missing{};
  missing[0] = 0xAB;
  CHECK_THROWS_AS((void)reg.find(missing), MissingInitError);
  fs::remove_all(dir);
}

TEST_CASE("empty dataset is rejected") {
  CHECK_THROWS_AS(
      (void)train_init({}, {}, quick_mcfg(), meta_cfg(), "unit"),
      ContractError);
}

}  // TEST_SUITE("meta")
