#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace promptevo::geometry {

using Vec3 = std::array<double, 3>;
using Face = std::array<std::uint32_t, 3>;

/// Triangle soup with shared vertices. Coordinates are in model units.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
};

struct PointCloud {
  std::vector<Vec3> points;
};

/// Per-axis extent (max - min) of a mesh.
struct BoundingDims {
  double lx = 0.0;
  double ly = 0.0;
  double lz = 0.0;
};

/// Performance of one design. `cd_normalized` is filled once a baseline span
/// is known; evaluators leave it at zero.
struct EvalResult {
  double cd = 0.0;
  double cd_normalized = 0.0;
  double frontal_area = 0.0;
  BoundingDims dims;
};

inline constexpr double kDegenerateFaceArea = 1e-12;
inline constexpr int kDefaultGridResolution = 256;

/// Drops faces with repeated or out-of-range indices, non-finite corners or an
/// area below kDegenerateFaceArea, then prunes unreferenced vertices.
/// Throws Error(empty_mesh) when nothing valid remains.
TriMesh validate_mesh(const TriMesh& mesh);

/// Permutes axes so that lx >= ly >= lz and centers the bounding box at the
/// origin. Equal extents (within 1e-9) keep their original order; an odd
/// permutation is compensated by mirroring z so handedness is kept.
TriMesh align_to_axes(const TriMesh& mesh);

BoundingDims bounding_dims(const TriMesh& mesh);

/// Area of the union of all triangles projected onto the y-z plane (flow
/// along x). The projected bounding rectangle is split into
/// grid_resolution x grid_resolution cells; a cell counts as occupied when all
/// four of its corners fall inside some projected triangle. For convex
/// silhouettes this is an inner approximation, so refining the grid never
/// shrinks the result.
double projected_frontal_area(const TriMesh& mesh,
                              int grid_resolution = kDefaultGridResolution);

/// Area-uniform surface samples, reproducible for a fixed seed.
PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance from a
/// to b plus the same term from b to a.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

/// cd / (baseline_max - baseline_min). Throws Error(degenerate_baseline) when
/// the span is not positive.
double normalize_cd(double cd, double baseline_min, double baseline_max);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double total_surface_area(const TriMesh& mesh);

/// Stable 64-bit FNV-1a digest of vertex and face bytes.
std::uint64_t content_hash(const TriMesh& mesh);

// Wavefront OBJ (v/f records, 1-based indices; polygons are fan-triangulated)
// and XYZ point files.
TriMesh read_obj(std::istream& in);
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);
PointCloud read_xyz(const std::filesystem::path& path);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

// Primitive builders used by tests, fixtures and the synthetic generator.
TriMesh make_box(const Vec3& min_corner, const Vec3& max_corner);
TriMesh make_uv_sphere(double radius, int segments, int rings);

}  // namespace promptevo::geometry
