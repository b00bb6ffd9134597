#include <Eigen/Geometry>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "contactfit/errors.hpp"
#include "contactfit/mesh.hpp"
#include "doctest.h"

using namespace contactfit;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("cube corner normals point along the diagonals") {
  const TriMesh cube = make_box({0, 0, 0}, {20, 20, 20});
  REQUIRE(cube.num_vertices() == 8);
  for (int v = 0; v < cube.num_vertices(); ++v) {
    const Vec3 expected = cube.vertices[v].normalized();  // centered at origin
    CHECK(cube.vertex_normals[v].isApprox(expected, 1e-9));
  }
}

TEST_CASE("single CCW triangle in the z=0 plane has +z normals") {
  TriMesh tri;
  tri.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  tri.faces = {{0, 1, 2}};
  tri = compute_normals(std::move(tri));
  CHECK(tri.face_normals[0].isApprox(Vec3(0, 0, 1), 1e-12));
  for (const Vec3& n : tri.vertex_normals)
    CHECK(n.isApprox(Vec3(0, 0, 1), 1e-12));
}

TEST_CASE("icosphere vertex normals match the analytic sphere normal") {
  const TriMesh sphere = make_icosphere(10.0, 3);
  for (int v = 0; v < sphere.num_vertices(); ++v) {
    const Vec3 analytic = sphere.vertices[v].normalized();
    // area-weighted averaging over a faceted sphere leaves a small bias
    CHECK((sphere.vertex_normals[v] - analytic).norm() < 2e-2);
  }
}

TEST_CASE("vertex normals are unit length") {
  const TriMesh sphere = make_icosphere(25.0, 2);
  for (const Vec3& n : sphere.vertex_normals)
    CHECK(std::abs(n.norm() - 1.0) < 1e-6);
}

TEST_CASE("degenerate faces are rejected") {
  TriMesh bad;
  bad.vertices = {{0, 0, 0}, {10, 0, 0}, {20, 0, 0}};  // collinear
  bad.faces = {{0, 1, 2}};
  CHECK_THROWS_AS(compute_normals(std::move(bad)), DegenerateFace);
}

TEST_CASE("out-of-range face indices are rejected") {
  TriMesh bad;
  bad.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  bad.faces = {{0, 1, 7}};
  CHECK_THROWS_AS(compute_normals(std::move(bad)), DimensionMismatch);
}

TEST_CASE("normals are invariant under vertex permutation") {
  const TriMesh sphere = make_icosphere(15.0, 2);
  const int n = sphere.num_vertices();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(11);
  std::shuffle(perm.begin(), perm.end(), rng);

  TriMesh shuffled;
  shuffled.vertices.resize(n);
  for (int i = 0; i < n; ++i) shuffled.vertices[perm[i]] = sphere.vertices[i];
  for (const auto& f : sphere.faces)
    shuffled.faces.push_back({perm[f[0]], perm[f[1]], perm[f[2]]});
  shuffled = compute_normals(std::move(shuffled));
  for (int i = 0; i < n; ++i)
    CHECK(shuffled.vertex_normals[perm[i]].isApprox(sphere.vertex_normals[i],
                                                    1e-9));
}

TEST_CASE("watertightness") {
  CHECK(is_watertight(make_box({0, 0, 0}, {10, 10, 10})));
  CHECK(is_watertight(make_icosphere(10.0, 1)));
  CHECK(is_watertight(make_cylinder(5.0, 20.0, 12)));
  CHECK(is_watertight(make_grid_box({0, 0, 0}, {10, 12, 14}, 3, 2, 4)));

  TriMesh open;  // one triangle: every edge is a boundary edge
  open.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
  open.faces = {{0, 1, 2}};
  open = compute_normals(std::move(open));
  CHECK_FALSE(is_watertight(open));
}

TEST_CASE("OBJ save/load round trip") {
  const TriMesh box = make_box({1, 2, 3}, {10, 20, 30});
  const auto path = temp_file("contactfit_test_box.obj");
  save_mesh(box, path.string());
  const TriMesh loaded = load_mesh(path.string());
  REQUIRE(loaded.num_vertices() == box.num_vertices());
  REQUIRE(loaded.num_faces() == box.num_faces());
  for (int v = 0; v < box.num_vertices(); ++v)
    CHECK((loaded.vertices[v] - box.vertices[v]).norm() < 1e-6);
  CHECK(loaded.faces == box.faces);
}

TEST_CASE("PLY save/load round trip") {
  const TriMesh sphere = make_icosphere(7.5, 1, {4, -2, 1});
  const auto path = temp_file("contactfit_test_sphere.ply");
  save_mesh(sphere, path.string());
  const TriMesh loaded = load_mesh(path.string());
  REQUIRE(loaded.num_vertices() == sphere.num_vertices());
  for (int v = 0; v < sphere.num_vertices(); ++v)
    CHECK((loaded.vertices[v] - sphere.vertices[v]).norm() < 1e-5);
}

TEST_CASE("load scale converts units") {
  const TriMesh box = make_box({0, 0, 0}, {2, 2, 2});
  const auto path = temp_file("contactfit_test_scale.obj");
  save_mesh(box, path.string());
  const TriMesh scaled = load_mesh(path.string(), 1000.0);  // meters to mm
  Vec3 lo, hi;
  scaled.aabb(lo, hi);
  CHECK((hi - lo).isApprox(Vec3(2000, 2000, 2000), 1e-9));
}

TEST_CASE("loading a missing file throws") {
  CHECK_THROWS_AS(load_mesh("/nonexistent/path/mesh.obj"), FileFormat);
}

TEST_CASE("quad OBJ faces are triangulated") {
  const auto path = temp_file("contactfit_test_quad.obj");
  {
    std::ofstream out(path);
    out << "v 0 0 0\nv 10 0 0\nv 10 10 0\nv 0 10 0\nf 1 2 3 4\n";
  }
  const TriMesh loaded = load_mesh(path.string());
  CHECK(loaded.num_vertices() == 4);
  CHECK(loaded.num_faces() == 2);
}

TEST_CASE("aabb bounds") {
  const TriMesh box = make_box({5, 0, -5}, {10, 20, 2});
  Vec3 lo, hi;
  box.aabb(lo, hi);
  CHECK(lo.isApprox(Vec3(0, -10, -6), 1e-12));
  CHECK(hi.isApprox(Vec3(10, 10, -4), 1e-12));
}

TEST_CASE("transformed applies the rigid transform") {
  const TriMesh box = make_box({0, 0, 0}, {10, 10, 10});
  Eigen::Matrix3d r;
  r = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ());
  const TriMesh moved = transformed(box, r, {100, 0, 0});
  for (int v = 0; v < box.num_vertices(); ++v)
    CHECK((moved.vertices[v] - (r * box.vertices[v] + Vec3(100, 0, 0))).norm() <
          1e-9);
}
