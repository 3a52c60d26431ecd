// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inrc/codec.hpp"
#include "inrc/nn.hpp"
#include "inrc/quant.hpp"
#include "inrc/training.hpp"

namespace inrc {

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  void validate() const;  // indices in range, no degenerate references
  bool empty() const { return triangles.empty(); }
};

/// OBJ with v/f records (polygons are fan-triangulated) is the mandatory
/// format; OFF is accepted too.
Mesh load_mesh(const std::string& path);
void save_obj(const Mesh& mesh, const std::string& path);

/// Centers the bounding box at the origin and scales the longest side to 1
/// (the shape fits [-1/2, 1/2]^3, leaving margin inside the [-1,1]^3
/// sampling domain). Idempotent up to floating point rounding.
Mesh normalize_to_unit_cube(const Mesh& mesh);

/// Every undirected edge is shared by exactly two triangles.
bool is_watertight(const Mesh& mesh);

/// Exact unsigned point-triangle distance (squared).
double point_triangle_sq_distance(const Eigen::Vector3d& p,
                                  const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b,
                                  const Eigen::Vector3d& c);

/// AABB tree over triangles with exact nearest-distance and ray-crossing
/// queries (results match the brute-force scan).
class TriangleBvh {
 public:
  explicit TriangleBvh(const Mesh& mesh);

  double unsigned_distance(const Eigen::Vector3d& p) const;
  /// Number of triangles crossed by the ray p + t*d, t > 0.
  int ray_crossings(const Eigen::Vector3d& p, const Eigen::Vector3d& d) const;

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;   // internal children
    int first = 0, count = 0;    // leaf triangle range
  };
  int build(int first, int count, int depth);
  void query_nearest(int node, const Eigen::Vector3d& p, double& best) const;
  void query_ray(int node, const Eigen::Vector3d& p, const Eigen::Vector3d& d,
                 const Eigen::Vector3d& inv_d, int& crossings) const;

  const Mesh* mesh_;
  std::vector<int> order_;  // triangle indices, leaf-contiguous
  std::vector<Node> nodes_;
  std::vector<Eigen::Vector3d> centroids_;
};

/// Exact nearest-neighbor queries over a fixed point set.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Eigen::Vector3d> points);
  double nearest_sq_distance(const Eigen::Vector3d& q) const;

 private:
  struct Node {
    int axis = 0;
    int point = -1;
    int left = -1, right = -1;
  };
  int build(int first, int count, int depth);
  void query(int node, const Eigen::Vector3d& q, double& best) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct SampledSDF {
  Eigen::MatrixXd points;     // n x 3, inside [-1,1]^3
  Eigen::VectorXd distances;  // signed: negative inside
};

/// Surface-weighted SDF sampling: 20% uniform in the cube, 40% surface
/// points under isotropic Gaussian noise sigma = 0.01, 40% under sigma = 0.1
/// (clamped to the cube). Distances are exact point-to-mesh minima; the sign
/// comes from a majority vote of three ray-parity tests with seeded
/// directions. Throws SignAmbiguityError for non-watertight meshes.
SampledSDF sample_sdf(const Mesh& mesh, std::size_t n, std::uint64_t seed);

/// Area-weighted surface point sample (used by chamfer).
std::vector<Eigen::Vector3d> sample_surface(const Mesh& mesh, std::size_t n,
                                            std::uint64_t seed);

struct SdfTrainConfig {
  long epochs = 500;
  double lr0 = 5e-5;
  long batch = 10000;
  double l1_lambda = 0.0;  // no L1 on the 3D path
  long plateau_patience = 500;
  double plateau_factor = 0.5;
  long early_stop = 5000;
  double lr_floor = 1e-8;
  std::uint64_t seed = 0;
};

struct SdfFitResult {
  ParamSet params;            // best-epoch checkpoint
  std::vector<double> trace;  // mean loss per epoch
  double best_loss = 0.0;
  long epochs_run = 0;
};

/// Minibatch MSE fit of f(p) ~ d. One epoch is a full shuffled pass over the
/// samples; the plateau schedule and the best checkpoint track the epoch
/// mean loss.
SdfFitResult overfit_sdf(const SampledSDF& samples, const ModelConfig& config,
                         const SdfTrainConfig& tcfg);

/// Evaluates the field on an R^3 grid over [-1,1]^3 and extracts the zero
/// isosurface with linear interpolation along cell edges (tetrahedral cell
/// decomposition, so the output is watertight away from the domain
/// boundary). R >= 16. Throws EmptySurfaceError when no sign change exists.
Mesh reconstruct(const ParamSet& params, const ModelConfig& config,
                 int resolution);

/// Symmetric chamfer distance: n area-weighted surface samples per mesh
/// (both drawn with the same seed), squared nearest-neighbor distances
/// averaged in both directions.
double chamfer(const Mesh& a, const Mesh& b, std::size_t n,
               std::uint64_t seed);

struct SdfEncodeOptions {
  ModelConfig model;       // in_dim 3, out_dim 1
  SdfTrainConfig train;
  AdaRoundConfig adaround; // 3D default iters: 2000
  QatConfig qat;           // 3D defaults: 50 epochs at 1e-7
  int bitwidth = 8;
  std::size_t samples = 100000;
  int adaround_sample_rows = 4096;
  std::uint64_t seed = 0;

  SdfEncodeOptions() {
    model.in_dim = 3;
    model.out_dim = 1;
    adaround.iters = 2000;
    qat.epochs = 50;
    qat.lr = 1e-7;
  }
};

struct SdfEncodeReport {
  std::size_t container_bytes = 0;
  double sample_mse = 0.0;  // decoded-model MSE on the training samples
  long epochs_run = 0;
  double wall_seconds = 0.0;
};

/// Normalize, sample, overfit, quantize (AdaRound + QAT on the sample
/// batch), entropy-code. The container carries no resolution: that is a
/// decode-time parameter.
std::vector<std::uint8_t> encode_sdf(const Mesh& mesh,
                                     const SdfEncodeOptions& options,
                                     SdfEncodeReport* report = nullptr);

Mesh decode_sdf(std::span<const std::uint8_t> bytes, int resolution);

}  // namespace inrc
