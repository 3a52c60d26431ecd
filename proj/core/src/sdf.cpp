// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/sdf.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "inrc/encoding.hpp"
#include "inrc/errors.hpp"
#include "inrc/rng.hpp"

namespace inrc {

void Mesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int idx : t)
      if (idx < 0 || idx >= n)
        throw ContractError("Mesh: triangle index out of range");
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Mesh mesh;
  std::string line;

  // OFF?
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".off" || ext == ".OFF") {
    std::string magic;
    in >> magic;
    if (magic != "OFF") throw ParseError(path + ": not an OFF file", 0);
    std::size_t nv = 0, nf = 0, ne = 0;
    in >> nv >> nf >> ne;
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) in >> v.x() >> v.y() >> v.z();
    for (std::size_t f = 0; f < nf; ++f) {
      int k = 0;
      in >> k;
      if (k < 3) throw ParseError(path + ": bad face", f);
      std::vector<int> idx(k);
      for (auto& i : idx) in >> i;
      for (int i = 2; i < k; ++i)
        mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
    }
    if (!in) throw ParseError(path + ": truncated OFF data", 0);
    mesh.validate();
    return mesh;
  }

  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v.x() >> v.y() >> v.z()))
        throw ParseError(path + ": bad vertex", lineno);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "i", "i/t", "i/t/n", "i//n"; indices are 1-based, negatives count
        // from the end.
        const auto slash = tok.find('/');
        const long raw = std::stol(tok.substr(0, slash));
        long i = raw > 0 ? raw - 1
                         : static_cast<long>(mesh.vertices.size()) + raw;
        if (i < 0 || i >= static_cast<long>(mesh.vertices.size()))
          throw ParseError(path + ": face index out of range", lineno);
        idx.push_back(static_cast<int>(i));
      }
      if (idx.size() < 3) throw ParseError(path + ": bad face", lineno);
      for (std::size_t i = 2; i < idx.size(); ++i)
        mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
    }
  }
  mesh.validate();
  return mesh;
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(9);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Mesh normalize_to_unit_cube(const Mesh& mesh) {
  if (mesh.vertices.empty()) throw ContractError("normalize: empty mesh");
  Eigen::Vector3d lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw ContractError("normalize: degenerate mesh");
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  // Unit cube [-1/2, 1/2]^3; the sampling and evaluation domain [-1,1]^3
  // keeps a margin around the shape.
  const double scale = 1.0 / extent;
  Mesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) * scale;
  return out;
}

bool is_watertight(const Mesh& mesh) {
  if (mesh.empty()) return false;
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a == b) return false;
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [edge, count] : edge_count)
    if (count != 2) return false;
  return true;
}

double point_triangle_sq_distance(const Eigen::Vector3d& p,
                                  const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b,
                                  const Eigen::Vector3d& c) {
  // Ericson, Real-Time Collision Detection, closest point on triangle.
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).squaredNorm();
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).squaredNorm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).squaredNorm();
  }
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).squaredNorm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).squaredNorm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).squaredNorm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).squaredNorm();
}

namespace {

bool ray_hits_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& d,
                       const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                       const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d h = d.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-14) return false;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = p - a;
  const double u = s.dot(h) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  return e2.dot(q) * inv > 1e-12;
}

double box_sq_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo,
                       const Eigen::Vector3d& hi) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double v = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
    d += v * v;
  }
  return d;
}

// Slab test for the semi-infinite ray p + t*d, t > 0.
bool ray_hits_box(const Eigen::Vector3d& p, const Eigen::Vector3d& d,
                  const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
      continue;
    }
    double t0 = (lo[i] - p[i]) / d[i];
    double t1 = (hi[i] - p[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  return true;
}

}  // namespace

TriangleBvh::TriangleBvh(const Mesh& mesh) : mesh_(&mesh) {
  if (mesh.empty()) throw ContractError("TriangleBvh: empty mesh");
  mesh.validate();
  const int n = static_cast<int>(mesh.triangles.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  centroids_.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[i];
    centroids_[i] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] +
                     mesh.vertices[t[2]]) /
                    3.0;
  }
  nodes_.reserve(static_cast<std::size_t>(2 * n));
  build(0, n, 0);
}

int TriangleBvh::build(int first, int count, int depth) {
  Node node;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = first; i < first + count; ++i) {
    const auto& t = mesh_->triangles[order_[i]];
    for (int k = 0; k < 3; ++k) {
      node.lo = node.lo.cwiseMin(mesh_->vertices[t[k]]);
      node.hi = node.hi.cwiseMax(mesh_->vertices[t[k]]);
    }
  }
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (count <= 4 || depth > 48) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  Eigen::Vector3d clo =
      Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d chi = -clo;
  for (int i = first; i < first + count; ++i) {
    clo = clo.cwiseMin(centroids_[order_[i]]);
    chi = chi.cwiseMax(centroids_[order_[i]]);
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid,
                   order_.begin() + first + count, [&](int a, int b) {
                     return centroids_[a][axis] < centroids_[b][axis];
                   });
  const int left = build(first, mid - first, depth + 1);
  const int right = build(mid, first + count - mid, depth + 1);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void TriangleBvh::query_nearest(int node, const Eigen::Vector3d& p,
                                double& best) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (box_sq_distance(p, n.lo, n.hi) >= best) return;
  if (n.left < 0) {
    for (int i = n.first; i < n.first + n.count; ++i) {
      const auto& t = mesh_->triangles[order_[i]];
      best = std::min(best, point_triangle_sq_distance(
                                p, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                                mesh_->vertices[t[2]]));
    }
    return;
  }
  const double dl = box_sq_distance(p, nodes_[n.left].lo, nodes_[n.left].hi);
  const double dr = box_sq_distance(p, nodes_[n.right].lo, nodes_[n.right].hi);
  if (dl <= dr) {
    query_nearest(n.left, p, best);
    query_nearest(n.right, p, best);
  } else {
    query_nearest(n.right, p, best);
    query_nearest(n.left, p, best);
  }
}

double TriangleBvh::unsigned_distance(const Eigen::Vector3d& p) const {
  double best = std::numeric_limits<double>::infinity();
  query_nearest(0, p, best);
  return std::sqrt(best);
}

void TriangleBvh::query_ray(int node, const Eigen::Vector3d& p,
                            const Eigen::Vector3d& d,
                            const Eigen::Vector3d& inv_d,
                            int& crossings) const {
  (void)inv_d;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (!ray_hits_box(p, d, n.lo, n.hi)) return;
  if (n.left < 0) {
    for (int i = n.first; i < n.first + n.count; ++i) {
      const auto& t = mesh_->triangles[order_[i]];
      if (ray_hits_triangle(p, d, mesh_->vertices[t[0]], mesh_->vertices[t[1]],
                            mesh_->vertices[t[2]]))
        ++crossings;
    }
    return;
  }
  query_ray(n.left, p, d, inv_d, crossings);
  query_ray(n.right, p, d, inv_d, crossings);
}

int TriangleBvh::ray_crossings(const Eigen::Vector3d& p,
                               const Eigen::Vector3d& d) const {
  int crossings = 0;
  query_ray(0, p, d, d.cwiseInverse(), crossings);
  return crossings;
}

KdTree3::KdTree3(std::vector<Eigen::Vector3d> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw ContractError("KdTree3: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree3::build(int first, int count, int depth) {
  if (count <= 0) return -1;
  const int axis = depth % 3;
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid,
                   order_.begin() + first + count, [&](int a, int b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  Node node;
  node.axis = axis;
  node.point = order_[mid];
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(first, mid - first, depth + 1);
  const int right = build(mid + 1, count - (mid - first) - 1, depth + 1);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void KdTree3::query(int node, const Eigen::Vector3d& q, double& best) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  best = std::min(best, (points_[n.point] - q).squaredNorm());
  const double delta = q[n.axis] - points_[n.point][n.axis];
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  query(near, q, best);
  if (delta * delta < best) query(far, q, best);
}

double KdTree3::nearest_sq_distance(const Eigen::Vector3d& q) const {
  double best = std::numeric_limits<double>::infinity();
  query(root_, q, best);
  return best;
}

namespace {

struct SurfaceSampler {
  const Mesh* mesh;
  std::vector<double> cum_area;
  double total = 0.0;

  explicit SurfaceSampler(const Mesh& m) : mesh(&m) {
    cum_area.reserve(m.triangles.size());
    for (const auto& t : m.triangles) {
      const Eigen::Vector3d e1 = m.vertices[t[1]] - m.vertices[t[0]];
      const Eigen::Vector3d e2 = m.vertices[t[2]] - m.vertices[t[0]];
      total += 0.5 * e1.cross(e2).norm();
      cum_area.push_back(total);
    }
    if (!(total > 0.0)) throw ContractError("surface sampling: zero-area mesh");
  }

  Eigen::Vector3d sample(Rng& rng) const {
    const double u = rng.next_unit() * total;
    const auto it = std::upper_bound(cum_area.begin(), cum_area.end(), u);
    const std::size_t ti = std::min(
        static_cast<std::size_t>(it - cum_area.begin()), cum_area.size() - 1);
    const auto& t = mesh->triangles[ti];
    const double r1 = rng.next_unit(), r2 = rng.next_unit();
    const double s = std::sqrt(r1);
    const double w0 = 1.0 - s, w1 = s * (1.0 - r2), w2 = s * r2;
    return w0 * mesh->vertices[t[0]] + w1 * mesh->vertices[t[1]] +
           w2 * mesh->vertices[t[2]];
  }
};

}  // namespace

std::vector<Eigen::Vector3d> sample_surface(const Mesh& mesh, std::size_t n,
                                            std::uint64_t seed) {
  mesh.validate();
  if (mesh.empty()) throw ContractError("sample_surface: empty mesh");
  SurfaceSampler sampler(mesh);
  Rng rng(seed);
  std::vector<Eigen::Vector3d> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) points.push_back(sampler.sample(rng));
  return points;
}

SampledSDF sample_sdf(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  mesh.validate();
  if (n == 0) throw ContractError("sample_sdf: n >= 1");
  if (!is_watertight(mesh))
    throw SignAmbiguityError(
        "sample_sdf: mesh is not watertight, inside/outside is ambiguous");
  const TriangleBvh bvh(mesh);
  SurfaceSampler sampler(mesh);
  Rng rng(seed);

  // Three seeded parity-test directions, drawn before the points.
  std::array<Eigen::Vector3d, 3> dirs;
  for (auto& d : dirs) {
    do {
      d = {rng.next_normal(), rng.next_normal(), rng.next_normal()};
    } while (d.norm() < 1e-9);
    d.normalize();
  }

  const std::size_t n_uniform = n / 5;           // 20%
  const std::size_t n_near = (n - n_uniform) / 2;  // 40%
  const std::size_t n_far = n - n_uniform - n_near;

  SampledSDF out;
  out.points.resize(static_cast<Eigen::Index>(n), 3);
  out.distances.resize(static_cast<Eigen::Index>(n));

  Eigen::Index row = 0;
  auto emit = [&](const Eigen::Vector3d& p) {
    out.points.row(row) = p.transpose();
    ++row;
  };
  for (std::size_t i = 0; i < n_uniform; ++i)
    emit({rng.next_uniform(-1.0, 1.0), rng.next_uniform(-1.0, 1.0),
          rng.next_uniform(-1.0, 1.0)});
  auto perturbed = [&](double sigma) {
    Eigen::Vector3d p = sampler.sample(rng);
    p += sigma * Eigen::Vector3d(rng.next_normal(), rng.next_normal(),
                                 rng.next_normal());
    return p.cwiseMax(-1.0).cwiseMin(1.0).eval();
  };
  for (std::size_t i = 0; i < n_near; ++i) emit(perturbed(0.01));
  for (std::size_t i = 0; i < n_far; ++i) emit(perturbed(0.1));

  for (Eigen::Index i = 0; i < out.points.rows(); ++i) {
    const Eigen::Vector3d p = out.points.row(i).transpose();
    const double d = bvh.unsigned_distance(p);
    int votes = 0;
    for (const auto& dir : dirs)
      if (bvh.ray_crossings(p, dir) % 2 == 1) ++votes;
    out.distances(i) = (votes >= 2) ? -d : d;
  }
  return out;
}

SdfFitResult overfit_sdf(const SampledSDF& samples, const ModelConfig& config,
                         const SdfTrainConfig& tcfg) {
  config.validate();
  if (config.in_dim != 3 || config.out_dim != 1)
    throw ContractError("overfit_sdf: config must map R^3 -> R");
  const Eigen::Index n = samples.points.rows();
  if (n < 1 || samples.distances.size() != n)
    throw ContractError("overfit_sdf: bad sample set");
  if (tcfg.epochs < 1 || tcfg.batch < 1)
    throw ContractError("overfit_sdf: epochs and batch must be >= 1");

  const Eigen::MatrixXd inputs = encode_inputs(samples.points, config);
  const Eigen::MatrixXd targets = samples.distances;
  const Eigen::Index batch = std::min<Eigen::Index>(tcfg.batch, n);

  ParamSet params = init_siren(config, tcfg.seed);
  AdamState adam = AdamState::like(params);
  PlateauSchedule sched(tcfg.lr0, tcfg.plateau_patience, tcfg.plateau_factor,
                        tcfg.lr_floor);
  Rng rng(Rng(tcfg.seed).fork(0x736466));  // "sdf"

  SdfFitResult res;
  res.best_loss = std::numeric_limits<double>::infinity();
  long since_improve = 0;
  Eigen::MatrixXd bx(batch, inputs.cols());
  Eigen::MatrixXd bt(batch, 1);
  for (long e = 0; e < tcfg.epochs; ++e) {
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    double epoch_loss = 0.0;
    Eigen::Index consumed = 0;
    while (consumed < n) {
      const Eigen::Index take = std::min(batch, n - consumed);
      for (Eigen::Index i = 0; i < take; ++i) {
        const auto src = static_cast<Eigen::Index>(perm[consumed + i]);
        bx.row(i) = inputs.row(src);
        bt.row(i) = targets.row(src);
      }
      LossGrad lg;
      try {
        lg = loss_and_grad(params, config,
                           Eigen::MatrixXd(bx.topRows(take)),
                           Eigen::MatrixXd(bt.topRows(take)), tcfg.l1_lambda);
      } catch (const DivergedError&) {
        throw DivergedError("overfit_sdf: training diverged", e);
      }
      epoch_loss += lg.loss * static_cast<double>(take);
      adam_step(adam, params, lg.grads, sched.lr());
      consumed += take;
    }
    epoch_loss /= static_cast<double>(n);
    res.trace.push_back(epoch_loss);
    res.epochs_run = e + 1;
    if (epoch_loss < res.best_loss) {
      res.best_loss = epoch_loss;
      res.params = params;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (since_improve >= tcfg.early_stop) break;
    sched.observe(epoch_loss);
  }
  return res;
}

namespace {

// Cube corners in the conventional order; tetrahedral decomposition sharing
// the 0-6 diagonal, face-diagonal consistent with the neighbor cells.
constexpr int kCubeCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kTets[6][4] = {{0, 5, 1, 6}, {0, 1, 2, 6}, {0, 2, 3, 6},
                             {0, 3, 7, 6}, {0, 7, 4, 6}, {0, 4, 5, 6}};

}  // namespace

Mesh reconstruct(const ParamSet& params, const ModelConfig& config,
                 int resolution) {
  config.validate();
  if (config.in_dim != 3 || config.out_dim != 1)
    throw ContractError("reconstruct: config must map R^3 -> R");
  if (resolution < 16) throw ContractError("reconstruct: resolution >= 16");
  const int r = resolution;
  const std::size_t total = static_cast<std::size_t>(r) * r * r;
  std::vector<double> values(total);

  // Evaluate slab by slab to bound the encoded-input working set.
  {
    Eigen::MatrixXd slab(static_cast<Eigen::Index>(r) * r, 3);
    for (int ix = 0; ix < r; ++ix) {
      const double x = 2.0 * ix / (r - 1) - 1.0;
      Eigen::Index row = 0;
      for (int iy = 0; iy < r; ++iy) {
        const double y = 2.0 * iy / (r - 1) - 1.0;
        for (int iz = 0; iz < r; ++iz, ++row) {
          slab(row, 0) = x;
          slab(row, 1) = y;
          slab(row, 2) = 2.0 * iz / (r - 1) - 1.0;
        }
      }
      const Eigen::MatrixXd y_out =
          forward(params, config, Eigen::MatrixXd(encode_inputs(slab, config)));
      for (Eigen::Index i = 0; i < y_out.rows(); ++i)
        values[static_cast<std::size_t>(ix) * r * r +
               static_cast<std::size_t>(i)] = y_out(i, 0);
    }
  }

  auto node_index = [&](int ix, int iy, int iz) -> std::size_t {
    return (static_cast<std::size_t>(ix) * r + static_cast<std::size_t>(iy)) *
               r +
           static_cast<std::size_t>(iz);
  };
  auto node_pos = [&](std::size_t idx) -> Eigen::Vector3d {
    const int iz = static_cast<int>(idx % r);
    const int iy = static_cast<int>((idx / r) % r);
    const int ix = static_cast<int>(idx / (static_cast<std::size_t>(r) * r));
    return {2.0 * ix / (r - 1) - 1.0, 2.0 * iy / (r - 1) - 1.0,
            2.0 * iz / (r - 1) - 1.0};
  };

  Mesh out;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  auto crossing_vertex = [&](std::size_t na, std::size_t nb) -> int {
    if (na > nb) std::swap(na, nb);
    const std::uint64_t key =
        static_cast<std::uint64_t>(na) * total + static_cast<std::uint64_t>(nb);
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double va = values[na], vb = values[nb];
    const double t = va / (va - vb);
    const Eigen::Vector3d pa = node_pos(na), pb = node_pos(nb);
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, idx);
    return idx;
  };

  std::size_t corner[8];
  for (int ix = 0; ix + 1 < r; ++ix) {
    for (int iy = 0; iy + 1 < r; ++iy) {
      for (int iz = 0; iz + 1 < r; ++iz) {
        for (int k = 0; k < 8; ++k)
          corner[k] = node_index(ix + kCubeCorner[k][0], iy + kCubeCorner[k][1],
                                 iz + kCubeCorner[k][2]);
        for (const auto& tet : kTets) {
          std::size_t nd[4];
          bool inside[4];
          int count = 0;
          for (int k = 0; k < 4; ++k) {
            nd[k] = corner[tet[k]];
            inside[k] = values[nd[k]] < 0.0;
            if (inside[k]) ++count;
          }
          if (count == 0 || count == 4) continue;
          if (count == 1 || count == 3) {
            const bool lone_inside = (count == 1);
            int lone = 0;
            while (inside[lone] != lone_inside) ++lone;
            int others[3], w = 0;
            for (int k = 0; k < 4; ++k)
              if (k != lone) others[w++] = k;
            const int a = crossing_vertex(nd[lone], nd[others[0]]);
            const int b = crossing_vertex(nd[lone], nd[others[1]]);
            const int c = crossing_vertex(nd[lone], nd[others[2]]);
            if (lone_inside)
              out.triangles.push_back({a, b, c});
            else
              out.triangles.push_back({a, c, b});
          } else {
            int ins[2], outs[2], wi = 0, wo = 0;
            for (int k = 0; k < 4; ++k)
              (inside[k] ? ins[wi++] : outs[wo++]) = k;
            const int a = crossing_vertex(nd[ins[0]], nd[outs[0]]);
            const int b = crossing_vertex(nd[ins[0]], nd[outs[1]]);
            const int c = crossing_vertex(nd[ins[1]], nd[outs[1]]);
            const int d = crossing_vertex(nd[ins[1]], nd[outs[0]]);
            out.triangles.push_back({a, b, c});
            out.triangles.push_back({a, c, d});
          }
        }
      }
    }
  }
  if (out.triangles.empty())
    throw EmptySurfaceError("reconstruct: the field has no zero crossing");
  return out;
}

double chamfer(const Mesh& a, const Mesh& b, std::size_t n,
               std::uint64_t seed) {
  if (a.empty() || b.empty()) throw ContractError("chamfer: empty mesh");
  // Both meshes are sampled with the same seed, which makes the metric
  // symmetric in its arguments by construction.
  const auto pa = sample_surface(a, n, seed);
  const auto pb = sample_surface(b, n, seed);
  const KdTree3 ta(pa);
  const KdTree3 tb(pb);
  double ab = 0.0, ba = 0.0;
  for (const auto& p : pa) ab += tb.nearest_sq_distance(p);
  for (const auto& p : pb) ba += ta.nearest_sq_distance(p);
  return 0.5 * (ab / static_cast<double>(n) + ba / static_cast<double>(n));
}

std::vector<std::uint8_t> encode_sdf(const Mesh& mesh,
                                     const SdfEncodeOptions& options,
                                     SdfEncodeReport* report) {
  const auto t_start = std::chrono::steady_clock::now();
  ModelConfig model = options.model.canonical();
  model.validate();
  if (model.in_dim != 3 || model.out_dim != 1)
    throw ContractError("encode_sdf: config must map R^3 -> R");

  const Mesh normalized = normalize_to_unit_cube(mesh);
  Rng rng(options.seed);
  const SampledSDF samples =
      sample_sdf(normalized, options.samples, rng.fork(0x73616d70));  // "samp"

  SdfTrainConfig tcfg = options.train;
  tcfg.seed = rng.fork(0x666974);  // "fit"
  const SdfFitResult fit = overfit_sdf(samples, model, tcfg);

  const Eigen::MatrixXd inputs = encode_inputs(samples.points, model);
  const Eigen::MatrixXd targets = samples.distances;

  QuantizedParams grids = quantize_params(fit.params, options.bitwidth);
  Eigen::MatrixXd ada_inputs;
  {
    const int min_rows = std::max(options.adaround_sample_rows, 4096);
    if (inputs.rows() <= min_rows) {
      ada_inputs = inputs;
    } else {
      Rng arng(rng.fork(0x616461));
      const auto perm = arng.permutation(static_cast<std::size_t>(inputs.rows()));
      ada_inputs.resize(min_rows, inputs.cols());
      for (int i = 0; i < min_rows; ++i)
        ada_inputs.row(i) = inputs.row(static_cast<Eigen::Index>(perm[i]));
    }
  }
  const QuantizedParams rounded =
      adaround_params(fit.params, model, ada_inputs, grids, options.adaround);
  const QatResult trained =
      qat(rounded, model, inputs, targets, options.qat);

  CodecContainer container;
  container.mode = QuantMode::full;
  container.kind = PayloadKind::sdf;
  container.config = model;
  container.grids.reserve(trained.qparams.tensors.size());
  for (const auto& t : trained.qparams.tensors)
    container.grids.push_back(t.grid);
  {
    std::vector<CodeTensorView> views;
    views.reserve(trained.qparams.tensors.size());
    for (const auto& t : trained.qparams.tensors)
      views.push_back(
          {std::span<const std::uint32_t>(t.codes), t.grid.bitwidth});
    container.payload = encode_codes(views);
  }
  std::vector<std::uint8_t> bytes = serialize_container(container);

  if (report) {
    const CodecContainer parsed = parse_container(bytes);
    const ParamSet params = decode_params(parsed);
    const Eigen::MatrixXd y = forward(params, model, inputs);
    report->sample_mse =
        (y - targets).squaredNorm() / static_cast<double>(inputs.rows());
    report->container_bytes = bytes.size();
    report->epochs_run = fit.epochs_run;
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  }
  return bytes;
}

Mesh decode_sdf(std::span<const std::uint8_t> bytes, int resolution) {
  const CodecContainer container = parse_container(bytes);
  if (container.kind != PayloadKind::sdf)
    throw ContractError("decode_sdf: container does not hold an SDF");
  const ParamSet params = decode_params(container);
  return reconstruct(params, container.config, resolution);
}

}  // namespace inrc
