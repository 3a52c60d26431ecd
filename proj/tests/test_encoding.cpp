// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "inrc/encoding.hpp"
#include "inrc/errors.hpp"

using namespace inrc;

TEST_SUITE("encoding") {

TEST_CASE("2x2 grid hits the four corners in documented order") {
  const Eigen::MatrixXd g = make_grid(2, 2);
  REQUIRE(g.rows() == 4);
  // Width-outer, height-inner: (i,j) -> row i*H + j.
  CHECK(g.row(0) == Eigen::RowVector2d(-1, -1));
  CHECK(g.row(1) == Eigen::RowVector2d(-1, 1));
  CHECK(g.row(2) == Eigen::RowVector2d(1, -1));
  CHECK(g.row(3) == Eigen::RowVector2d(1, 1));
}

TEST_CASE("odd grids have an exact center; endpoints are exact") {
  const Eigen::MatrixXd g3 = make_grid(3, 2);
  CHECK(g3(2, 0) == 0.0);  // i=1 of width 3
  const Eigen::MatrixXd g = make_grid(768, 2);
  CHECK(g(0, 0) == -1.0);
  CHECK(g(767 * 2, 0) == 1.0);
}

TEST_CASE("degenerate grids are rejected") {
  CHECK_THROWS_AS((void)make_grid(1, 8), DegenerateGridError);
  CHECK_THROWS_AS((void)make_grid(8, 1), DegenerateGridError);
  CHECK_THROWS_AS((void)make_grid3(1), DegenerateGridError);
}

TEST_CASE("positional encoding of p = 0") {
  Eigen::MatrixXd c(1, 1);
  c << 0.0;
  const Eigen::MatrixXd e = positional_encode(c, 3, 1.4);
  REQUIRE(e.cols() == 7);
  CHECK(e(0, 0) == 0.0);
  for (int l = 0; l < 3; ++l) {
    CHECK(e(0, 1 + 2 * l) == 0.0);  // sin terms
    CHECK(e(0, 2 + 2 * l) == 1.0);  // cos terms
  }
}

TEST_CASE("positional encoding of p = 1 at the first frequency") {
  Eigen::MatrixXd c(1, 1);
  c << 1.0;
  const Eigen::MatrixXd e = positional_encode(c, 1, 1.4);
  CHECK(std::abs(e(0, 1)) < 1e-12);                      // sin(pi)
  CHECK(e(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));  // cos(pi)
}

TEST_CASE("encoded width is in_dim*(1+2L)") {
  const Eigen::MatrixXd g = make_grid(4, 4);
  const Eigen::MatrixXd e = positional_encode(g, 16, 1.4);
  CHECK(e.cols() == 2 * (1 + 2 * 16));  // 66, the stock image setting
}

TEST_CASE("frequency ladder uses sigma^l * pi") {
  Eigen::MatrixXd c(1, 1);
  const double p = 0.37;
  c << p;
  const double sigma = 1.4;
  const Eigen::MatrixXd e = positional_encode(c, 4, sigma);
  double freq = 3.14159265358979323846;
  for (int l = 0; l < 4; ++l) {
    CHECK(e(0, 1 + 2 * l) == doctest::Approx(std::sin(freq * p)).epsilon(1e-14));
    CHECK(e(0, 2 + 2 * l) == doctest::Approx(std::cos(freq * p)).epsilon(1e-14));
    freq *= sigma;
  }
}

TEST_CASE("gaussian encoding of the zero vector is (0,1) repeated") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd e = gaussian_encode(c, 5, 4.0, 2024);
  REQUIRE(e.cols() == 10);
  for (int r = 0; r < 5; ++r) {
    CHECK(e(0, 2 * r) == 0.0);
    CHECK(e(0, 2 * r + 1) == 1.0);
  }
}

TEST_CASE("gaussian frequencies are seed-deterministic") {
  const auto a = gaussian_frequencies(32, 2, 4.0, 7);
  const auto b = gaussian_frequencies(32, 2, 4.0, 7);
  CHECK(a == b);
  const auto c = gaussian_frequencies(32, 2, 4.0, 8);
  CHECK(a != c);
}

TEST_CASE("all encoded features lie in [-1,1]") {
  const Eigen::MatrixXd g = make_grid(17, 13);
  for (const auto& e :
       {positional_encode(g, 8, 1.4), gaussian_encode(g, 16, 4.0, 5)}) {
    CHECK(e.maxCoeff() <= 1.0);
    CHECK(e.minCoeff() >= -1.0);
  }
}

TEST_CASE("encoding is pointwise: subset rows equal encoded subset") {
  const Eigen::MatrixXd g = make_grid(9, 7);
  ModelConfig cfg;
  cfg.encoding = EncodingKind::gaussian;
  cfg.frequencies = 6;
  cfg.sigma = 4.0;
  cfg.encoding_seed = 11;
  const Eigen::MatrixXd full = encode_inputs(g, cfg);
  Eigen::MatrixXd sub(3, 2);
  sub.row(0) = g.row(5);
  sub.row(1) = g.row(20);
  sub.row(2) = g.row(62);
  const Eigen::MatrixXd esub = encode_inputs(sub, cfg);
  CHECK(esub.row(0) == full.row(5));
  CHECK(esub.row(1) == full.row(20));
  CHECK(esub.row(2) == full.row(62));
}

}  // TEST_SUITE
