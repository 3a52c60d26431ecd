// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "inrc/sdf.hpp"
#include "testutil.hpp"

using namespace inrc;

namespace {

// Analytic sphere field d(p) = |p| - r expressed as network weights is not
// needed; tests that want an exact field build meshes instead.

Mesh open_quad() {
  Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

}  // namespace

TEST_SUITE("sdf_geometry") {

TEST_CASE("point-triangle distance against a brute-force grid") {
  const Eigen::Vector3d a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  // Interior projection.
  CHECK(point_triangle_sq_distance({0.2, 0.2, 0.5}, a, b, c) ==
        doctest::Approx(0.25).epsilon(1e-12));
  // Nearest vertex.
  CHECK(point_triangle_sq_distance({-1, -1, 0}, a, b, c) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // Nearest edge (midpoint of ab).
  CHECK(point_triangle_sq_distance({0.5, -2, 0}, a, b, c) ==
        doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("bvh distances equal the brute-force scan") {
  const Mesh sphere = test::icosphere(2, 0.5);
  const TriangleBvh bvh(sphere);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(rng.next_uniform(-1, 1), rng.next_uniform(-1, 1),
                            rng.next_uniform(-1, 1));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : sphere.triangles)
      best = std::min(best, point_triangle_sq_distance(
                                p, sphere.vertices[t[0]], sphere.vertices[t[1]],
                                sphere.vertices[t[2]]));
    CHECK(bvh.unsigned_distance(p) ==
          doctest::Approx(std::sqrt(best)).epsilon(1e-12));
  }
}

TEST_CASE("kd-tree nearest neighbor equals the double loop") {
  Rng rng(7);
  std::vector<Eigen::Vector3d> pts(100);
  for (auto& p : pts)
    p = {rng.next_uniform(-1, 1), rng.next_uniform(-1, 1),
         rng.next_uniform(-1, 1)};
  const KdTree3 tree(pts);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d q(rng.next_uniform(-1, 1), rng.next_uniform(-1, 1),
                            rng.next_uniform(-1, 1));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, (p - q).squaredNorm());
    CHECK(tree.nearest_sq_distance(q) == best);
  }
}

TEST_CASE("normalization fits the unit cube and is idempotent") {
  Mesh m = test::icosphere(1, 3.0);
  for (auto& v : m.vertices) v += Eigen::Vector3d(5, -2, 1);
  const Mesh n1 = normalize_to_unit_cube(m);
  Eigen::Vector3d lo = n1.vertices[0], hi = n1.vertices[0];
  for (const auto& v : n1.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  CHECK((hi - lo).maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lo.minCoeff() >= -0.5 - 1e-12);
  CHECK(hi.maxCoeff() <= 0.5 + 1e-12);
  const Mesh n2 = normalize_to_unit_cube(n1);
  for (std::size_t i = 0; i < n1.vertices.size(); ++i)
    CHECK((n2.vertices[i] - n1.vertices[i]).norm() < 1e-12);
  // A shape already inside the unit cube is left alone (up to recentering).
  const Mesh sphere = test::icosphere(2, 0.5);
  const Mesh ns = normalize_to_unit_cube(sphere);
  for (std::size_t i = 0; i < sphere.vertices.size(); ++i)
    CHECK((ns.vertices[i] - sphere.vertices[i]).norm() < 1e-12);
}

TEST_CASE("watertightness check") {
  CHECK(is_watertight(test::icosphere(1, 1.0)));
  CHECK(!is_watertight(open_quad()));
}

TEST_CASE("obj save/load round-trip") {
  namespace fs = std::filesystem;
  const Mesh m = test::icosphere(1, 0.5);
  const auto path = (fs::temp_directory_path() / "inrc_t.obj").string();
  save_obj(m, path);
  const Mesh back = load_mesh(path);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.triangles.size() == m.triangles.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-7);
  CHECK(back.triangles == m.triangles);
  fs::remove(path);
}

}  // TEST_SUITE("sdf_geometry")

TEST_SUITE("sdf_sampling") {

TEST_CASE("sphere distances: center, surface vertex, brute force") {
  const Mesh sphere = test::icosphere(3, 0.5);
  const SampledSDF s = sample_sdf(sphere, 500, 11);
  CHECK(s.points.rows() == 500);
  // All sampled points stay in the cube, distances within the diameter bound.
  CHECK(s.points.maxCoeff() <= 1.0);
  CHECK(s.points.minCoeff() >= -1.0);
  CHECK(s.distances.cwiseAbs().maxCoeff() <= 2.0 * std::sqrt(3.0));

  const TriangleBvh bvh(sphere);
  // Center of the sphere: d ~ -0.5 within faceting tolerance.
  const double d_center = bvh.unsigned_distance(Eigen::Vector3d::Zero());
  CHECK(d_center == doctest::Approx(0.5).epsilon(1e-2));
  // A point on a vertex has distance ~ 0.
  CHECK(bvh.unsigned_distance(sphere.vertices[17]) < 1e-12);
}

TEST_CASE("signs: interior negative for a convex watertight mesh") {
  const Mesh sphere = test::icosphere(3, 0.5);
  const SampledSDF s = sample_sdf(sphere, 2000, 13);
  const double shell = 0.01;  // keep clear of the faceted surface
  for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
    const double r = s.points.row(i).norm();
    if (r < 0.5 - shell) CHECK(s.distances(i) < 0.0);
    if (r > 0.5 + shell) CHECK(s.distances(i) > 0.0);
  }
}

TEST_CASE("sampling is deterministic and rejects open meshes") {
  const Mesh sphere = test::icosphere(2, 0.5);
  const SampledSDF a = sample_sdf(sphere, 300, 17);
  const SampledSDF b = sample_sdf(sphere, 300, 17);
  CHECK(a.points == b.points);
  CHECK(a.distances == b.distances);
  CHECK_THROWS_AS((void)sample_sdf(open_quad(), 100, 1), SignAmbiguityError);
}

TEST_CASE("unsigned distances match the brute-force oracle") {
  const Mesh sphere = test::icosphere(2, 0.5);
  const SampledSDF s = sample_sdf(sphere, 1000, 19);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const Eigen::Vector3d p = s.points.row(i * 20).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : sphere.triangles)
      best = std::min(best, point_triangle_sq_distance(
                                p, sphere.vertices[t[0]], sphere.vertices[t[1]],
                                sphere.vertices[t[2]]));
    CHECK(std::abs(s.distances(i * 20)) ==
          doctest::Approx(std::sqrt(best)).epsilon(1e-10));
  }
}

}  // TEST_SUITE("sdf_sampling")

TEST_SUITE("sdf_pipeline") {

TEST_CASE("a field without zero crossings raises EmptySurfaceError") {
  // Constant-positive field: f(p) = relu(0)*w + 0.25.
  ModelConfig cfg;
  cfg.in_dim = 3;
  cfg.out_dim = 1;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 1;
  cfg.activation = Activation::relu;
  cfg.omega = 1.0;
  cfg.encoding = EncodingKind::none;
  ParamSet p;
  p.layers.resize(2);
  p.layers[0].W = Eigen::MatrixXd::Zero(1, 3);
  p.layers[0].b = Eigen::VectorXd::Zero(1);
  p.layers[1].W = Eigen::MatrixXd::Zero(1, 1);
  p.layers[1].b = Eigen::VectorXd::Constant(1, 0.25);
  CHECK_THROWS_AS((void)reconstruct(p, cfg, 16), EmptySurfaceError);
}

TEST_CASE("isosurface of a linear field is the expected plane") {
  // f(p) = x - 0.25: a relu net with positive pre-activation slope carries
  // the linear function through; the zero set is the plane x = 0.25.
  ModelConfig cfg;
  cfg.in_dim = 3;
  cfg.out_dim = 1;
  cfg.hidden_layers = 1;
  cfg.hidden_width = 2;
  cfg.activation = Activation::relu;
  cfg.omega = 1.0;
  cfg.encoding = EncodingKind::none;
  ParamSet p;
  p.layers.resize(2);
  // h0 = relu(x + 2) = x + 2 on the cube; h1 = relu(2) = 2.
  p.layers[0].W.resize(2, 3);
  p.layers[0].W << 1, 0, 0, 0, 0, 0;
  p.layers[0].b.resize(2);
  p.layers[0].b << 2.0, 2.0;
  p.layers[1].W.resize(1, 2);
  p.layers[1].W << 1.0, 0.0;
  p.layers[1].b = Eigen::VectorXd::Constant(1, -2.25);
  const Mesh m = reconstruct(p, cfg, 32);
  REQUIRE(!m.triangles.empty());
  for (const auto& v : m.vertices)
    CHECK(v.x() == doctest::Approx(0.25).epsilon(1e-9));
  // Flipping the field sign keeps the vertex set (orientation flips).
  ParamSet flipped = p;
  flipped.layers[1].W = -flipped.layers[1].W;
  flipped.layers[1].b = -flipped.layers[1].b;
  const Mesh mf = reconstruct(flipped, cfg, 32);
  CHECK(mf.vertices.size() == m.vertices.size());
  double max_dev = 0.0;
  for (const auto& v : mf.vertices)
    max_dev = std::max(max_dev, std::abs(v.x() - 0.25));
  CHECK(max_dev < 1e-9);
}

TEST_CASE("chamfer: identity, symmetry, parallel planes") {
  const Mesh a = test::icosphere(3, 0.5);
  CHECK(chamfer(a, a, 5000, 3) < 1e-6);

  Mesh b = a;
  for (auto& v : b.vertices) v.x() += 0.01;
  CHECK(chamfer(a, b, 5000, 3) == chamfer(b, a, 5000, 3));

  // Two parallel unit quads at offset t: chamfer ~ t^2 for small t.
  auto quad_at = [](double z) {
    Mesh m;
    m.vertices = {{0, 0, z}, {1, 0, z}, {1, 1, z}, {0, 1, z}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
  };
  const double t = 0.05;
  const double d = chamfer(quad_at(0.0), quad_at(t), 20000, 9);
  CHECK(d == doctest::Approx(t * t).epsilon(0.05));
}

TEST_CASE("chamfer 100-point brute force matches the kd-tree path") {
  const Mesh a = test::icosphere(1, 0.5);
  Mesh b = test::icosphere(1, 0.45);
  const std::size_t n = 100;
  const auto pa = sample_surface(a, n, 77);
  const auto pb = sample_surface(b, n, 77);
  double ab = 0, ba = 0;
  for (const auto& p : pa) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : pb) best = std::min(best, (p - q).squaredNorm());
    ab += best;
  }
  for (const auto& q : pb) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pa) best = std::min(best, (p - q).squaredNorm());
    ba += best;
  }
  const double brute = 0.5 * (ab / n + ba / n);
  CHECK(chamfer(a, b, n, 77) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("overfit_sdf fits an analytic sphere sample set") {
  const Mesh sphere = test::icosphere(3, 0.5);
  const SampledSDF samples = sample_sdf(sphere, 4000, 23);
  ModelConfig cfg;
  cfg.in_dim = 3;
  cfg.out_dim = 1;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 16;
  cfg.frequencies = 4;
  SdfTrainConfig tcfg;
  tcfg.epochs = 150;
  tcfg.lr0 = 2e-3;
  tcfg.batch = 1000;
  tcfg.seed = 5;
  const SdfFitResult fit = overfit_sdf(samples, cfg, tcfg);
  CHECK(fit.best_loss < 1e-4);
  double running = std::numeric_limits<double>::infinity();
  for (double l : fit.trace) running = std::min(running, l);
  CHECK(fit.best_loss == running);
}

}  // TEST_SUITE("sdf_pipeline")
