#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

namespace contactfit {

using Vec3 = Eigen::Vector3d;

// Indexed triangle mesh. Positions are in millimeters, faces wound
// counter-clockwise when seen from outside.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> vertex_normals;  // unit, one per vertex
  std::vector<Vec3> face_normals;    // unit, one per face

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_faces() const { return static_cast<int>(faces.size()); }

  void aabb(Vec3& lo, Vec3& hi) const;
};

// Fills vertex and face normals. Vertex normals are the area-weighted
// average of incident face normals, renormalized.
// Throws DegenerateFace if any triangle area < 1e-12 mm^2, and
// DimensionMismatch for out-of-range face indices.
TriMesh compute_normals(TriMesh mesh);

// True iff every undirected edge is shared by exactly two faces with
// opposite orientation (closed, consistently oriented 2-manifold;
// multiple connected components allowed).
bool is_watertight(const TriMesh& mesh);

// OBJ / ASCII-PLY loading and saving, chosen by file extension.
// Positions are multiplied by `scale` on load. Normals are recomputed.
TriMesh load_mesh(const std::string& path, double scale = 1.0);
void save_mesh(const TriMesh& mesh, const std::string& path);

// Primitive generators (watertight, normals computed).
TriMesh make_box(const Vec3& center, const Vec3& full_extents);
TriMesh make_grid_box(const Vec3& center, const Vec3& full_extents, int nx,
                      int ny, int nz);
TriMesh make_icosphere(double radius, int subdivisions,
                       const Vec3& center = Vec3::Zero());
TriMesh make_cylinder(double radius, double height, int segments,
                      const Vec3& center = Vec3::Zero());

TriMesh transformed(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                    const Vec3& translation);

}  // namespace contactfit
