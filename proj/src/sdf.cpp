#include "contactfit/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "contactfit/errors.hpp"

namespace contactfit {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c, Vec3* barycentric) {
  // Ericson, Real-Time Collision Detection, 5.1.5
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  auto bary = [&](double u, double v, double w) {
    if (barycentric) *barycentric = Vec3(u, v, w);
  };
  if (d1 <= 0.0 && d2 <= 0.0) {
    bary(1, 0, 0);
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    bary(0, 1, 0);
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    bary(1 - v, v, 0);
    return a + v * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    bary(0, 0, 1);
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    bary(1 - w, 0, w);
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary(0, 1 - w, w);
    return b + w * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  bary(1 - v - w, v, w);
  return a + ab * v + ac * w;
}

namespace {

constexpr int kLeafTris = 4;

double aabb_dist2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = std::max({lo[k] - q[k], 0.0, q[k] - hi[k]});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

MeshDistanceField::MeshDistanceField(const TriMesh& mesh)
    : mesh_(mesh.face_normals.size() == mesh.faces.size()
                ? mesh
                : compute_normals(mesh)) {
  if (mesh_.faces.empty()) throw EmptyMesh("distance field over empty mesh");

  // adjacency via directed edges; also determines watertightness
  std::map<std::pair<int, int>, int> directed;  // edge -> face
  watertight_ = true;
  for (int f = 0; f < mesh_.num_faces(); ++f) {
    const auto& tri = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (!directed.emplace(std::make_pair(tri[k], tri[(k + 1) % 3]), f)
               .second)
        watertight_ = false;
    }
  }
  edge_pseudonormals_.assign(mesh_.num_faces(), {Vec3::Zero(), Vec3::Zero(),
                                                 Vec3::Zero()});
  for (int f = 0; f < mesh_.num_faces() && watertight_; ++f) {
    const auto& tri = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) {
      const auto it = directed.find({tri[(k + 1) % 3], tri[k]});
      if (it == directed.end()) {
        watertight_ = false;
        break;
      }
      edge_pseudonormals_[f][k] =
          (mesh_.face_normals[f] + mesh_.face_normals[it->second])
              .normalized();
    }
  }

  // angle-weighted vertex pseudonormals
  vertex_pseudonormals_.assign(mesh_.num_vertices(), Vec3::Zero());
  for (int f = 0; f < mesh_.num_faces(); ++f) {
    const auto& tri = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh_.vertices[tri[k]];
      const Vec3 e0 = (mesh_.vertices[tri[(k + 1) % 3]] - v).normalized();
      const Vec3 e1 = (mesh_.vertices[tri[(k + 2) % 3]] - v).normalized();
      const double angle =
          std::acos(std::clamp(e0.dot(e1), -1.0, 1.0));
      vertex_pseudonormals_[tri[k]] += angle * mesh_.face_normals[f];
    }
  }
  for (Vec3& n : vertex_pseudonormals_) {
    const double len = n.norm();
    if (len > 1e-14) n /= len;
  }

  order_.resize(mesh_.num_faces());
  for (int i = 0; i < mesh_.num_faces(); ++i) order_[i] = i;
  nodes_.reserve(2 * mesh_.num_faces() / kLeafTris + 2);
  root_ = build(0, mesh_.num_faces());
}

int MeshDistanceField::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh_.vertices[mesh_.faces[order_[i]][k]];
      node.lo = node.lo.cwiseMin(v);
      node.hi = node.hi.cwiseMax(v);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafTris) return id;

  int axis;
  (node.hi - node.lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  auto centroid = [&](int face) {
    const auto& tri = mesh_.faces[face];
    return (mesh_.vertices[tri[0]][axis] + mesh_.vertices[tri[1]][axis] +
            mesh_.vertices[tri[2]][axis]) /
           3.0;
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end,
                   [&](int a, int b) { return centroid(a) < centroid(b); });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void MeshDistanceField::query_rec(int node, const Vec3& q, double& best_d2,
                                  int& best_face, Vec3& best_point) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int f = order_[i];
      const auto& tri = mesh_.faces[f];
      const Vec3 cp = closest_point_on_triangle(
          q, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
          mesh_.vertices[tri[2]]);
      const double d2 = (q - cp).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best_face = f;
        best_point = cp;
      }
    }
    return;
  }
  const double dl = aabb_dist2(q, nodes_[n.left].lo, nodes_[n.left].hi);
  const double dr = aabb_dist2(q, nodes_[n.right].lo, nodes_[n.right].hi);
  const int first = dl <= dr ? n.left : n.right;
  const int second = dl <= dr ? n.right : n.left;
  const double dfirst = std::min(dl, dr), dsecond = std::max(dl, dr);
  if (dfirst < best_d2) query_rec(first, q, best_d2, best_face, best_point);
  if (dsecond < best_d2) query_rec(second, q, best_d2, best_face, best_point);
}

void MeshDistanceField::query(const Vec3& q, double& best_d2, int& best_face,
                              Vec3& best_point) const {
  best_d2 = std::numeric_limits<double>::infinity();
  best_face = -1;
  query_rec(root_, q, best_d2, best_face, best_point);
}

double MeshDistanceField::unsigned_distance(const Vec3& query) const {
  double d2;
  int face;
  Vec3 cp;
  this->query(query, d2, face, cp);
  return std::sqrt(d2);
}

Vec3 MeshDistanceField::closest_point(const Vec3& query) const {
  double d2;
  int face;
  Vec3 cp;
  this->query(query, d2, face, cp);
  return cp;
}

Vec3 MeshDistanceField::pseudonormal_at(int face, const Vec3& point) const {
  const auto& tri = mesh_.faces[face];
  Vec3 bary;
  closest_point_on_triangle(point + Vec3::Zero(), mesh_.vertices[tri[0]],
                            mesh_.vertices[tri[1]], mesh_.vertices[tri[2]],
                            &bary);
  constexpr double eps = 1e-9;
  int zero_count = 0, zero_idx = -1, nonzero_idx = -1;
  for (int k = 0; k < 3; ++k) {
    if (bary[k] < eps) {
      ++zero_count;
      zero_idx = k;
    } else {
      nonzero_idx = k;
    }
  }
  if (zero_count == 0) return mesh_.face_normals[face];
  if (zero_count == 2) return vertex_pseudonormals_[tri[nonzero_idx]];
  // one zero barycentric: closest point on the edge opposite vertex zero_idx,
  // which is edge (zero_idx+1, zero_idx+2)
  return edge_pseudonormals_[face][(zero_idx + 1) % 3];
}

double MeshDistanceField::signed_distance(const Vec3& query) const {
  if (!watertight_)
    throw NotWatertight("signed distance requires a watertight mesh");
  double d2;
  int face;
  Vec3 cp;
  this->query(query, d2, face, cp);
  const double d = std::sqrt(d2);
  if (d == 0.0) return 0.0;
  const Vec3 n = pseudonormal_at(face, cp);
  return (query - cp).dot(n) >= 0.0 ? d : -d;
}

double signed_distance(const Vec3& query, const TriMesh& mesh) {
  return MeshDistanceField(mesh).signed_distance(query);
}

VoxelGrid voxelize(const TriMesh& mesh, double cell_size) {
  MeshDistanceField field(mesh);
  Vec3 lo, hi;
  mesh.aabb(lo, hi);
  lo -= Vec3::Constant(cell_size);
  hi += Vec3::Constant(cell_size);
  VoxelGrid grid;
  grid.cell_size = cell_size;
  grid.nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_size));
  grid.ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_size));
  grid.nz = static_cast<int>(std::ceil((hi.z() - lo.z()) / cell_size));
  grid.origin = lo + Vec3::Constant(cell_size / 2.0);
  grid.occupancy.assign(
      static_cast<size_t>(grid.nx) * grid.ny * grid.nz, 0);
  for (int x = 0; x < grid.nx; ++x)
    for (int y = 0; y < grid.ny; ++y)
      for (int z = 0; z < grid.nz; ++z) {
        const Vec3 c = grid.origin + cell_size * Vec3(x, y, z);
        if (field.signed_distance(c) < 0.0)
          grid.occupancy[(static_cast<size_t>(x) * grid.ny + y) * grid.nz +
                         z] = 1;
      }
  return grid;
}

double intersection_volume(const TriMesh& a, const TriMesh& b,
                           double cell_size) {
  Vec3 alo, ahi, blo, bhi;
  a.aabb(alo, ahi);
  b.aabb(blo, bhi);
  const Vec3 lo = alo.cwiseMax(blo);
  const Vec3 hi = ahi.cwiseMin(bhi);
  if ((hi - lo).minCoeff() <= 0.0) {
    // still validate watertightness of both inputs
    if (!is_watertight(a) || !is_watertight(b))
      throw NotWatertight("intersection volume requires watertight meshes");
    return 0.0;
  }
  MeshDistanceField fa(a), fb(b);
  if (!fa.watertight() || !fb.watertight())
    throw NotWatertight("intersection volume requires watertight meshes");
  long count = 0;
  for (double x = lo.x() + cell_size / 2.0; x < hi.x(); x += cell_size)
    for (double y = lo.y() + cell_size / 2.0; y < hi.y(); y += cell_size)
      for (double z = lo.z() + cell_size / 2.0; z < hi.z(); z += cell_size) {
        const Vec3 c(x, y, z);
        if (fa.signed_distance(c) < 0.0 && fb.signed_distance(c) < 0.0)
          ++count;
      }
  return static_cast<double>(count) * cell_size * cell_size * cell_size /
         1000.0;  // mm^3 -> cm^3
}

}  // namespace contactfit
