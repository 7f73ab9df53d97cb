#include "promptevo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "promptevo/error.hpp"

namespace promptevo::geometry {
namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

bool finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

struct Bounds {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
};

Bounds mesh_bounds(const TriMesh& mesh) {
  if (mesh.faces.empty() || mesh.vertices.empty()) {
    throw Error(ErrorCode::empty_mesh, "mesh has no faces");
  }
  Bounds b;
  for (const auto& v : mesh.vertices) {
    for (int k = 0; k < 3; ++k) {
      b.lo[k] = std::min(b.lo[k], v[k]);
      b.hi[k] = std::max(b.hi[k], v[k]);
    }
  }
  return b;
}

// Static 3-d tree over a point set, exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : points_(points), index_(points.size()) {
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    nodes_.reserve(points.size());
    if (!points.empty()) root_ = build(0, points.size(), 0);
  }

  double nearest_squared(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    std::size_t point = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 3;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{index_[mid], axis, -1, -1});
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid + 1, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(int id, const Vec3& q, double& best) const {
    if (id < 0) return;
    const Node& node = nodes_[id];
    const Vec3& p = points_[node.point];
    best = std::min(best, squared_distance(p, q));
    const double diff = q[node.axis] - p[node.axis];
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff < best) search(far, q, best);
  }

  const std::vector<Vec3>& points_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

double directed_mean(const PointCloud& from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from.points) sum += to.nearest_squared(p);
  return sum / static_cast<double>(from.points.size());
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(sub(b, a), sub(c, a)));
}

double total_surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    area += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
  }
  return area;
}

TriMesh validate_mesh(const TriMesh& mesh) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<Face> kept;
  kept.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    if (f[0] >= nv || f[1] >= nv || f[2] >= nv) continue;
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    if (!finite(a) || !finite(b) || !finite(c)) continue;
    const double area = triangle_area(a, b, c);
    if (!(area >= kDegenerateFaceArea)) continue;
    kept.push_back(f);
  }
  if (kept.empty()) throw Error(ErrorCode::empty_mesh, "no valid face remains after validation");

  constexpr auto unused = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> remap(nv, unused);
  TriMesh out;
  for (auto& f : kept) {
    for (auto& idx : f) {
      if (remap[idx] == unused) {
        remap[idx] = static_cast<std::uint32_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[idx]);
      }
      idx = remap[idx];
    }
  }
  out.faces = std::move(kept);
  return out;
}

BoundingDims bounding_dims(const TriMesh& mesh) {
  const Bounds b = mesh_bounds(mesh);
  return {b.hi[0] - b.lo[0], b.hi[1] - b.lo[1], b.hi[2] - b.lo[2]};
}

TriMesh align_to_axes(const TriMesh& mesh) {
  const Bounds b = mesh_bounds(mesh);
  const Vec3 extent{b.hi[0] - b.lo[0], b.hi[1] - b.lo[1], b.hi[2] - b.lo[2]};

  // Insertion sort on three axes; only a strictly larger extent (beyond the
  // tie tolerance) moves an axis forward.
  std::array<int, 3> perm{0, 1, 2};
  int swaps = 0;
  for (int i = 1; i < 3; ++i) {
    for (int j = i; j > 0 && extent[perm[j]] > extent[perm[j - 1]] + 1e-9; --j) {
      std::swap(perm[j], perm[j - 1]);
      ++swaps;
    }
  }
  const double z_sign = (swaps % 2 == 1) ? -1.0 : 1.0;
  const Vec3 center{0.5 * (b.lo[0] + b.hi[0]), 0.5 * (b.lo[1] + b.hi[1]), 0.5 * (b.lo[2] + b.hi[2])};

  TriMesh out;
  out.faces = mesh.faces;
  out.vertices.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    out.vertices.push_back({v[perm[0]] - center[perm[0]], v[perm[1]] - center[perm[1]],
                            z_sign * (v[perm[2]] - center[perm[2]])});
  }
  return out;
}

double projected_frontal_area(const TriMesh& mesh, int grid_resolution) {
  if (grid_resolution < 16) {
    throw Error(ErrorCode::invalid_argument, "grid_resolution must be at least 16");
  }
  const Bounds b = mesh_bounds(mesh);
  const double y0 = b.lo[1];
  const double z0 = b.lo[2];
  const double wy = b.hi[1] - b.lo[1];
  const double wz = b.hi[2] - b.lo[2];
  if (!(wy > 0.0) || !(wz > 0.0)) {
    throw Error(ErrorCode::zero_projection, "projected bounding rectangle has zero area");
  }
  const int n = grid_resolution;
  const double hy = wy / n;
  const double hz = wz / n;
  const int stride = n + 1;

  // Grid corners lying inside (or on the boundary of) a projected triangle.
  std::vector<unsigned char> covered(static_cast<std::size_t>(stride) * stride, 0);
  const double eps = 1e-12;
  for (const auto& f : mesh.faces) {
    const auto& a = mesh.vertices[f[0]];
    const auto& p = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    const double ay = (a[1] - y0) / hy, az = (a[2] - z0) / hz;
    const double by = (p[1] - y0) / hy, bz = (p[2] - z0) / hz;
    const double cy = (c[1] - y0) / hy, cz = (c[2] - z0) / hz;
    const double det = (by - ay) * (cz - az) - (bz - az) * (cy - ay);
    if (std::abs(det) < 1e-14) continue;
    const int iy0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}) - eps)));
    const int iy1 = std::min(n, static_cast<int>(std::ceil(std::max({ay, by, cy}) + eps)));
    const int iz0 = std::max(0, static_cast<int>(std::floor(std::min({az, bz, cz}) - eps)));
    const int iz1 = std::min(n, static_cast<int>(std::ceil(std::max({az, bz, cz}) + eps)));
    for (int iz = iz0; iz <= iz1; ++iz) {
      for (int iy = iy0; iy <= iy1; ++iy) {
        const double y = iy;
        const double z = iz;
        const double l1 = ((by - y) * (cz - z) - (bz - z) * (cy - y)) / det;
        const double l2 = ((cy - y) * (az - z) - (cz - z) * (ay - y)) / det;
        const double l3 = 1.0 - l1 - l2;
        if (l1 >= -eps && l2 >= -eps && l3 >= -eps) {
          covered[static_cast<std::size_t>(iz) * stride + iy] = 1;
        }
      }
    }
  }

  std::size_t occupied = 0;
  for (int iz = 0; iz < n; ++iz) {
    for (int iy = 0; iy < n; ++iy) {
      const std::size_t k = static_cast<std::size_t>(iz) * stride + iy;
      if (covered[k] && covered[k + 1] && covered[k + stride] && covered[k + stride + 1]) ++occupied;
    }
  }
  return static_cast<double>(occupied) * hy * hz;
}

PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.faces.empty()) throw Error(ErrorCode::empty_mesh, "cannot sample an empty mesh");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::empty_mesh, "mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    cloud.points.push_back({wa * a[0] + wb * b[0] + wc * c[0], wa * a[1] + wb * b[1] + wc * c[1],
                            wa * a[2] + wb * b[2] + wc * c[2]});
  }
  return cloud;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty()) {
    throw Error(ErrorCode::invalid_argument, "chamfer_distance needs non-empty clouds");
  }
  const KdTree tree_a(a.points);
  const KdTree tree_b(b.points);
  return directed_mean(a, tree_b) + directed_mean(b, tree_a);
}

double normalize_cd(double cd, double baseline_min, double baseline_max) {
  const double span = baseline_max - baseline_min;
  if (!(span > 0.0)) {
    throw Error(ErrorCode::degenerate_baseline, "baseline cd span must be positive");
  }
  return cd / span;
}

std::uint64_t content_hash(const TriMesh& mesh) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& v : mesh.vertices) hash_bytes(h, v.data(), sizeof(double) * 3);
  for (const auto& f : mesh.faces) hash_bytes(h, f.data(), sizeof(std::uint32_t) * 3);
  return h;
}

TriMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? hi[0] : lo[0], (i & 2) ? hi[1] : lo[1], (i & 4) ? hi[2] : lo[2]});
  }
  // Outward-facing, counter-clockwise.
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

TriMesh make_uv_sphere(double radius, int segments, int rings) {
  TriMesh m;
  const double pi = std::acos(-1.0);
  m.vertices.push_back({0.0, 0.0, radius});
  for (int r = 1; r < rings; ++r) {
    const double theta = pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double phi = 2.0 * pi * s / segments;
      m.vertices.push_back({radius * std::sin(theta) * std::cos(phi),
                            radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta)});
    }
  }
  m.vertices.push_back({0.0, 0.0, -radius});
  const auto ring_index = [&](int r, int s) {
    return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments));
  };
  const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (int s = 0; s < segments; ++s) m.faces.push_back({0, ring_index(1, s), ring_index(1, s + 1)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      m.faces.push_back({ring_index(r, s), ring_index(r + 1, s), ring_index(r + 1, s + 1)});
      m.faces.push_back({ring_index(r, s), ring_index(r + 1, s + 1), ring_index(r, s + 1)});
    }
  }
  for (int s = 0; s < segments; ++s) {
    m.faces.push_back({ring_index(rings - 1, s), south, ring_index(rings - 1, s + 1)});
  }
  return m;
}

}  // namespace promptevo::geometry
