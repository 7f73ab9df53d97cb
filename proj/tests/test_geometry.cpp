#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "promptevo/error.hpp"
#include "promptevo/geometry.hpp"

using namespace promptevo;
using namespace promptevo::geometry;

namespace {

TriMesh unit_cube() { return make_box({0, 0, 0}, {1, 1, 1}); }

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

double signed_volume(const TriMesh& m) {
  double v = 0.0;
  for (const auto& f : m.faces) {
    const auto& a = m.vertices[f[0]];
    const auto& b = m.vertices[f[1]];
    const auto& c = m.vertices[f[2]];
    v += (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])) / 6.0;
  }
  return v;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), u(rng)});
  return c;
}

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
  const auto directed = [](const PointCloud& p, const PointCloud& q) {
    double sum = 0.0;
    for (const auto& x : p.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : q.points) best = std::min(best, dist(x, y) * dist(x, y));
      sum += best;
    }
    return sum / static_cast<double>(p.points.size());
  };
  return directed(a, b) + directed(b, a);
}

}  // namespace

TEST_CASE("validate_mesh keeps a valid cube") {
  const auto m = validate_mesh(unit_cube());
  CHECK(m.faces.size() == 12);
  CHECK(m.vertices.size() == 8);
}

TEST_CASE("validate_mesh drops degenerate faces and is idempotent") {
  auto m = unit_cube();
  m.faces.push_back({0, 0, 0});
  m.faces.push_back({0, 1, 99});
  const auto once = validate_mesh(m);
  CHECK(once.faces.size() == 12);
  const auto twice = validate_mesh(once);
  CHECK(twice.faces == once.faces);
  CHECK(twice.vertices == once.vertices);
}

TEST_CASE("validate_mesh prunes unreferenced and non-finite vertices") {
  auto m = unit_cube();
  m.vertices.push_back({std::nan(""), 0, 0});
  m.vertices.push_back({5, 5, 5});
  m.faces.push_back({8, 0, 1});
  const auto v = validate_mesh(m);
  CHECK(v.vertices.size() == 8);
  CHECK(v.faces.size() == 12);
}

TEST_CASE("validate_mesh raises EmptyMesh when nothing valid remains") {
  TriMesh m;
  const double inf = std::numeric_limits<double>::infinity();
  m.vertices = {{inf, 0, 0}, {0, inf, 0}, {0, 0, std::nan("")}};
  m.faces = {{0, 1, 2}};
  try {
    validate_mesh(m);
    FAIL("expected EmptyMesh");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_mesh);
  }
}

TEST_CASE("bounding_dims examples") {
  const auto d = bounding_dims(unit_cube());
  CHECK(d.lx == 1.0);
  CHECK(d.ly == 1.0);
  CHECK(d.lz == 1.0);
  TriMesh tri{{{0, 0, 0}, {2, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
  const auto t = bounding_dims(tri);
  CHECK(t.lx == 2.0);
  CHECK(t.ly == 1.0);
  CHECK(t.lz == 0.0);
  const auto s = bounding_dims(make_box({5, 5, 5}, {6, 6, 6}));
  CHECK(s.lx == doctest::Approx(1.0));
  CHECK(s.ly == doctest::Approx(1.0));
  CHECK(s.lz == doctest::Approx(1.0));
}

TEST_CASE("align_to_axes sorts extents and centers") {
  const auto a = align_to_axes(make_box({0, 0, 0}, {1, 3, 2}));
  const auto d = bounding_dims(a);
  CHECK(d.lx == doctest::Approx(3.0));
  CHECK(d.ly == doctest::Approx(2.0));
  CHECK(d.lz == doctest::Approx(1.0));

  const auto b = bounding_dims(align_to_axes(make_box({1, 1, 1}, {6, 3, 2})));
  CHECK(b.lx == doctest::Approx(5.0));
  CHECK(b.ly == doctest::Approx(2.0));
  CHECK(b.lz == doctest::Approx(1.0));

  const auto s = align_to_axes(make_uv_sphere(1.0, 32, 16));
  const auto ds = bounding_dims(s);
  CHECK(ds.lx >= ds.ly);
  CHECK(ds.ly >= ds.lz);
  double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
  for (const auto& v : s.vertices) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
    }
  }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(lo[k] + hi[k]) < 1e-9);
}

TEST_CASE("align_to_axes keeps handedness and pairwise distances") {
  const auto m = make_box({0, 0, 0}, {1, 3, 2});  // odd permutation needed
  const auto a = align_to_axes(m);
  CHECK(signed_volume(m) > 0.0);
  CHECK(signed_volume(a) == doctest::Approx(signed_volume(m)));
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < m.vertices.size(); ++j) {
      CHECK(std::abs(dist(m.vertices[i], m.vertices[j]) - dist(a.vertices[i], a.vertices[j])) < 1e-9);
    }
  }
}

TEST_CASE("projected_frontal_area of a unit cube") {
  const double a = projected_frontal_area(unit_cube(), 256);
  CHECK(std::abs(a - 1.0) <= 2.0 / 256);
}

TEST_CASE("projected_frontal_area of a unit sphere") {
  const double a = projected_frontal_area(make_uv_sphere(1.0, 128, 64), 256);
  CHECK(std::abs(a - std::numbers::pi) <= 0.05);
}

TEST_CASE("projected_frontal_area takes the union of overlapping squares") {
  TriMesh m;
  m.vertices = {{0, 0, 0}, {0, 1, 0}, {0, 1, 1}, {0, 0, 1}, {0.5, 0, 0}, {0.5, 1, 0}, {0.5, 1, 1}, {0.5, 0, 1}};
  m.faces = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
  CHECK(projected_frontal_area(m, 256) == doctest::Approx(1.0).epsilon(2.0 / 256));
}

TEST_CASE("projected_frontal_area is monotone under grid refinement") {
  const auto sphere = make_uv_sphere(1.0, 64, 32);
  double prev = 0.0;
  for (int g : {64, 128, 256, 512}) {
    const double a = projected_frontal_area(sphere, g);
    CHECK(a >= prev);
    prev = a;
  }
  const double a256 = projected_frontal_area(sphere, 256);
  const double a512 = projected_frontal_area(sphere, 512);
  CHECK(std::abs(a512 - a256) / a512 < 0.01);
}

TEST_CASE("projected_frontal_area rejects bad input") {
  TriMesh flat{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};  // no z extent
  try {
    projected_frontal_area(flat, 64);
    FAIL("expected ZeroProjection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::zero_projection);
  }
  CHECK_THROWS_AS(projected_frontal_area(unit_cube(), 8), Error);
}

TEST_CASE("sample_surface is deterministic") {
  const auto a = sample_surface(unit_cube(), 1000, 42);
  const auto b = sample_surface(unit_cube(), 1000, 42);
  CHECK(a.points == b.points);
  CHECK(a.points.size() == 1000);
  CHECK(sample_surface(unit_cube(), 1000, 43).points != a.points);
}

namespace {

// Points per axis-aligned box face (order: x=lo, x=hi, y=lo, y=hi, z=lo, z=hi).
std::array<double, 6> face_counts(const PointCloud& cloud, const Vec3& hi) {
  std::array<double, 6> counts{};
  for (const auto& p : cloud.points) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(p[k]) < 1e-9) {
        counts[2 * k] += 1;
        break;
      }
      if (std::abs(p[k] - hi[k]) < 1e-9) {
        counts[2 * k + 1] += 1;
        break;
      }
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("sample_surface face shares on the unit cube") {
  const auto counts = face_counts(sample_surface(unit_cube(), 100000, 7), {1, 1, 1});
  for (double c : counts) CHECK(std::abs(c / 100000.0 - 1.0 / 6.0) <= 0.02 / 6.0);
}

TEST_CASE("sample_surface face shares on an unequal box") {
  // Face areas 6, 3 and 2 per pair; counts must sit within four binomial
  // standard deviations of the analytic area shares.
  const double n = 100000.0;
  const auto counts = face_counts(sample_surface(make_box({0, 0, 0}, {1, 2, 3}), 100000, 11), {1, 2, 3});
  const double face_area[3] = {6.0, 3.0, 2.0};
  double classified = 0.0;
  for (int f = 0; f < 6; ++f) {
    const double share = face_area[f / 2] / 22.0;
    CHECK(std::abs(counts[static_cast<std::size_t>(f)] / n - share) <= 4.0 * std::sqrt(share * (1.0 - share) / n));
    classified += counts[static_cast<std::size_t>(f)];
  }
  CHECK(classified == n);
}

TEST_CASE("sample_surface on a single triangle stays inside it") {
  TriMesh tri{{{0, 0, 1}, {2, 0, 1}, {0, 3, 1}}, {{0, 1, 2}}};
  const auto c = sample_surface(tri, 10, 0);
  REQUIRE(c.points.size() == 10);
  for (const auto& p : c.points) {
    CHECK(p[2] == doctest::Approx(1.0));
    CHECK(p[0] >= -1e-12);
    CHECK(p[1] >= -1e-12);
    CHECK(p[0] / 2.0 + p[1] / 3.0 <= 1.0 + 1e-12);
  }
}

TEST_CASE("chamfer_distance hand examples") {
  const auto c = random_cloud(30, 1);
  CHECK(chamfer_distance(c, c) == 0.0);
  PointCloud a{{{0, 0, 0}}}, b{{{1, 0, 0}}};
  CHECK(chamfer_distance(a, b) == doctest::Approx(2.0));
  CHECK_THROWS_AS(chamfer_distance(PointCloud{}, b), Error);
}

TEST_CASE("chamfer_distance matches the brute-force oracle") {
  for (std::size_t n : {50u, 200u}) {
    const auto a = random_cloud(n, 10 + n);
    const auto b = random_cloud(n + 17, 20 + n);
    const double ref = brute_chamfer(a, b);
    CHECK(std::abs(chamfer_distance(a, b) - ref) <= 1e-9 * ref);
    CHECK(chamfer_distance(a, b) == doctest::Approx(chamfer_distance(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("chamfer_distance is translation invariant") {
  auto a = random_cloud(200, 3);
  auto b = random_cloud(150, 4);
  const double before = chamfer_distance(a, b);
  for (auto* c : {&a, &b}) {
    for (auto& p : c->points) {
      p[0] += 3.5;
      p[1] -= 1.25;
      p[2] += 0.75;
    }
  }
  CHECK(std::abs(chamfer_distance(a, b) - before) <= 1e-9 * before);
}

TEST_CASE("normalize_cd") {
  CHECK(normalize_cd(0.5, 0.2, 0.7) == doctest::Approx(1.0));
  CHECK(normalize_cd(0.0, 0.2, 0.7) == 0.0);
  CHECK(normalize_cd(0.3, 0.2, 0.7) == doctest::Approx(0.6));
  CHECK(normalize_cd(0.6, 0.2, 0.7) == doctest::Approx(2.0 * normalize_cd(0.3, 0.2, 0.7)));
  try {
    normalize_cd(0.3, 0.5, 0.5);
    FAIL("expected DegenerateBaseline");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_baseline);
  }
}

TEST_CASE("OBJ read and write") {
  std::stringstream io;
  write_obj(io, unit_cube());
  const auto back = read_obj(io);
  CHECK(back.vertices == unit_cube().vertices);
  CHECK(back.faces == unit_cube().faces);

  std::istringstream quad("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -3 -2\n");
  const auto q = read_obj(quad);
  CHECK(q.faces.size() == 3);
  CHECK(q.faces[2] == Face{0, 1, 2});

  std::istringstream bad("v 0 0 0\nf 1 2 3\n");
  CHECK_THROWS_AS(read_obj(bad), Error);
}
