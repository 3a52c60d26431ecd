// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>

#include "doctest.h"
#include "inrc/codec.hpp"
#include "inrc/encoding.hpp"
#include "testutil.hpp"

using namespace inrc;

namespace {

EncodeOptions fast_options(int width, std::uint64_t seed) {
  EncodeOptions o;
  o.model.hidden_layers = 2;
  o.model.hidden_width = width;
  o.model.frequencies = 4;
  o.overfit.epochs = 250;
  o.overfit.lr0 = 3e-3;
  o.overfit.l1_lambda = 0.0;
  o.overfit.plateau_patience = 100;
  o.adaround.iters = 100;
  o.qat.epochs = 20;
  o.qat.lr = 1e-5;
  o.bitwidth = 6;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("ppm round-trip and grid-order target conversion") {
  namespace fs = std::filesystem;
  const ImageF img = test::toy_image(9, 5, 321);
  const auto path = (fs::temp_directory_path() / "inrc_t.ppm").string();
  save_ppm(img, path);
  const ImageF back = load_ppm(path);
  CHECK(back.width == 9);
  CHECK(back.height == 5);
  // 8-bit round trip: within half a level everywhere.
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0 + 1e-12);
  fs::remove(path);

  const Eigen::MatrixXd t = image_to_targets(img);
  CHECK(t(3 * 5 + 2, 1) == img.at(3, 2, 1));  // row = x*H + y
  const ImageF round = targets_to_image(t, 9, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(round.pixels[i] == img.pixels[i]);
}

TEST_CASE("box resize preserves constant images and total mass") {
  const ImageF c = test::constant_image(10, 6, 0.42);
  const ImageF r = box_resize(c, 4, 3);
  for (double v : r.pixels) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));

  const ImageF img = test::toy_image(12, 12, 5);
  const ImageF half = box_resize(img, 6, 6);
  double mean_full = 0.0, mean_half = 0.0;
  for (double v : img.pixels) mean_full += v;
  for (double v : half.pixels) mean_half += v;
  mean_full /= static_cast<double>(img.pixels.size());
  mean_half /= static_cast<double>(half.pixels.size());
  CHECK(mean_half == doctest::Approx(mean_full).epsilon(1e-12));
}

TEST_CASE("high-capacity model on a tiny image decodes above 40 dB") {
  const ImageF img = test::toy_image(16, 16, 100);
  EncodeOptions o = fast_options(48, 9);
  o.model.frequencies = 8;
  o.overfit.epochs = 1200;
  o.overfit.lr0 = 2e-3;
  o.bitwidth = 12;
  o.adaround.iters = 150;
  o.qat.epochs = 30;
  EncodeReport rep;
  const auto bytes = encode_image(img, o, nullptr, &rep);
  CHECK(rep.psnr > 40.0);
  CHECK(rep.bpp ==
        bitrate_bpp(8 * static_cast<std::uint64_t>(bytes.size()), 16, 16));
}

TEST_CASE("decode is deterministic and matches the encoder report") {
  const ImageF img = test::toy_image(12, 12, 200);
  const EncodeOptions o = fast_options(8, 33);
  EncodeReport rep;
  const auto bytes = encode_image(img, o, nullptr, &rep);

  const ImageF a = decode_image(bytes);
  const ImageF b = decode_image(bytes);
  CHECK(a.pixels == b.pixels);

  const double psnr = psnr_db(image_mse(img, quantize_8bit(a)));
  CHECK(psnr == rep.psnr);
}

TEST_CASE("seeded re-encodes are bit-identical") {
  const ImageF img = test::toy_image(12, 12, 201);
  const EncodeOptions o = fast_options(8, 44);
  const auto a = encode_image(img, o);
  const auto b = encode_image(img, o);
  CHECK(a == b);
}

TEST_CASE("decoding at twice the resolution is supported") {
  const ImageF img = test::toy_image(10, 8, 202);
  const EncodeOptions o = fast_options(8, 5);
  const auto bytes = encode_image(img, o);
  const ImageF big = decode_image(bytes, nullptr, 2);
  CHECK(big.width == 20);
  CHECK(big.height == 16);
}

TEST_CASE("delta-mode container round-trips through the registry") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "inrc_codec_registry";
  fs::create_directories(dir);

  const ImageF img = test::toy_image(12, 12, 203);
  EncodeOptions o = fast_options(8, 6);
  o.bitwidth = 7;
  o.overfit.warmup_epochs = 20;
  o.overfit.l1_lambda = 1e-5;

  MetaInit minit;
  minit.config = o.model;
  minit.theta0 = init_siren(o.model, 404);
  minit.alpha.resize(2);
  for (auto& a : minit.alpha) {
    a = zeros_like(minit.theta0);
    for_each_tensor(a, [](auto& m) { m.setConstant(1e-4); });
  }
  save_init(minit, (dir / "teacher.inri").string());

  EncodeReport rep;
  const auto bytes = encode_image(img, o, &minit, &rep);
  CHECK(rep.delta_mode);
  CHECK(rep.init_hash == minit.content_hash());

  const InitRegistry reg(dir.string());
  const ImageF decoded = decode_image(bytes, &reg);
  CHECK(psnr_db(image_mse(img, quantize_8bit(decoded))) == rep.psnr);

  // Without the registry the decode must fail loudly.
  CHECK_THROWS_AS((void)decode_image(bytes), MissingInitError);
  // With a registry that lacks the init: distinct missing-init error.
  const fs::path empty_dir = fs::temp_directory_path() / "inrc_empty_reg";
  fs::create_directories(empty_dir);
  const InitRegistry empty(empty_dir.string());
  CHECK_THROWS_AS((void)decode_image(bytes, &empty), MissingInitError);
  fs::remove_all(dir);
  fs::remove_all(empty_dir);
}

TEST_CASE("rd csv appends and reads back") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "inrc_rd.csv").string();
  std::error_code ec;
  fs::remove(path, ec);
  std::vector<RDPoint> pts = {{"img1", "basic", 32, 8, 0.5, 30.0},
                              {"img1", "jpeg", 0, 0, 0.48, 29.1}};
  append_rd_csv(path, pts);
  append_rd_csv(path, std::vector<RDPoint>{{"img2", "basic", 48, 8, 0.9, 33.3}});
  const auto back = read_rd_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].instance == "img1");
  CHECK(back[1].method == "jpeg");
  CHECK(back[1].width == 0);
  CHECK(back[2].bpp == doctest::Approx(0.9));
  fs::remove(path);
}

TEST_CASE("encode rejects configs that do not fit the image") {
  const ImageF img = test::toy_image(8, 8, 1);
  EncodeOptions o = fast_options(8, 1);
  o.model.in_dim = 3;
  CHECK_THROWS_AS((void)encode_image(img, o), ContractError);
}

}  // TEST_SUITE("codec")
