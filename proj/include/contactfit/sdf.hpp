#pragma once

#include <utility>
#include <vector>

#include "contactfit/mesh.hpp"

namespace contactfit {

// Closest point on a triangle (a,b,c) to p, plus barycentric coordinates.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* barycentric = nullptr);

// Point-to-surface distance queries over a triangle mesh, backed by an AABB
// tree. Sign is determined by the angle-weighted pseudonormal of the closest
// feature (face, edge, or vertex): negative inside.
class MeshDistanceField {
 public:
  explicit MeshDistanceField(const TriMesh& mesh);

  // Unsigned distance to the surface (mm). Works on any mesh.
  double unsigned_distance(const Vec3& query) const;

  // Signed distance (mm, negative inside). Throws NotWatertight if the mesh
  // is not a closed, consistently oriented manifold.
  double signed_distance(const Vec3& query) const;

  // Closest surface point.
  Vec3 closest_point(const Vec3& query) const;

  bool watertight() const { return watertight_; }
  const TriMesh& mesh() const { return mesh_; }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf triangle range into order_
  };

  int build(int begin, int end);
  // Returns (distance^2, face, closest point).
  void query(const Vec3& q, double& best_d2, int& best_face,
             Vec3& best_point) const;
  void query_rec(int node, const Vec3& q, double& best_d2, int& best_face,
                 Vec3& best_point) const;
  Vec3 pseudonormal_at(int face, const Vec3& point) const;

  TriMesh mesh_;
  bool watertight_ = false;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<Vec3> vertex_pseudonormals_;
  // per face, per edge (v0v1, v1v2, v2v0): normalized sum of the two
  // adjacent face normals
  std::vector<std::array<Vec3, 3>> edge_pseudonormals_;
};

// Convenience wrappers matching one-shot use.
double signed_distance(const Vec3& query, const TriMesh& mesh);

// Voxel occupancy of a single watertight mesh: a voxel is occupied when its
// center is inside the mesh. Grid bounds enclose the mesh AABB padded by one
// cell.
struct VoxelGrid {
  Vec3 origin;        // center of voxel (0,0,0)
  double cell_size;   // mm
  int nx = 0, ny = 0, nz = 0;
  std::vector<char> occupancy;  // x-major: (x * ny + y) * nz + z

  bool at(int x, int y, int z) const {
    return occupancy[(static_cast<size_t>(x) * ny + y) * nz + z] != 0;
  }
};

VoxelGrid voxelize(const TriMesh& mesh, double cell_size);

// Volume of the intersection of two watertight meshes, in cm^3, estimated by
// counting voxel centers inside both.
double intersection_volume(const TriMesh& a, const TriMesh& b,
                           double cell_size = 1.0);

}  // namespace contactfit
