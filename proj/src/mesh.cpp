#include "contactfit/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "contactfit/errors.hpp"

namespace contactfit {

void TriMesh::aabb(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

TriMesh compute_normals(TriMesh mesh) {
  const int nv = mesh.num_vertices();
  mesh.face_normals.assign(mesh.faces.size(), Vec3::Zero());
  mesh.vertex_normals.assign(nv, Vec3::Zero());
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& tri = mesh.faces[f];
    for (int c = 0; c < 3; ++c) {
      if (tri[c] < 0 || tri[c] >= nv)
        throw DimensionMismatch("face index out of range");
    }
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const Vec3 cross = (b - a).cross(c - a);
    const double area2 = cross.norm();  // twice the area
    if (0.5 * area2 < 1e-12)
      throw DegenerateFace("zero-area triangle at face " + std::to_string(f));
    mesh.face_normals[f] = cross / area2;
    // cross is area-weighted already
    for (int k = 0; k < 3; ++k) mesh.vertex_normals[tri[k]] += cross;
  }
  for (int v = 0; v < nv; ++v) {
    const double n = mesh.vertex_normals[v].norm();
    if (n > 1e-14) mesh.vertex_normals[v] /= n;
  }
  return mesh;
}

bool is_watertight(const TriMesh& mesh) {
  if (mesh.faces.empty()) return false;
  // directed edge -> count; each directed edge must appear exactly once and
  // its reverse exactly once.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;
    }
  }
  for (const auto& [e, c] : directed) {
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

namespace {

TriMesh load_obj(std::istream& in, double scale) {
  TriMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 p;
      ss >> p.x() >> p.y() >> p.z();
      if (!ss) throw FileFormat("bad OBJ vertex line: " + line);
      mesh.vertices.push_back(p * scale);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // accept "i", "i/t", "i//n", "i/t/n"
        idx.push_back(std::stoi(tok.substr(0, tok.find('/'))));
      }
      if (idx.size() < 3) throw FileFormat("bad OBJ face line: " + line);
      for (size_t k = 1; k + 1 < idx.size(); ++k)  // fan-triangulate
        mesh.faces.push_back({idx[0] - 1, idx[k] - 1, idx[k + 1] - 1});
    }
  }
  return mesh;
}

TriMesh load_ply(std::istream& in, double scale) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw FileFormat("not a PLY file");
  int nv = -1, nf = -1;
  bool ascii = false;
  std::string current_element;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = (fmt == "ascii");
    } else if (tag == "element") {
      std::string name;
      int count;
      ss >> name >> count;
      current_element = name;
      if (name == "vertex") nv = count;
      if (name == "face") nf = count;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (!ascii) throw FileFormat("only ASCII PLY is supported");
  if (nv < 0 || nf < 0) throw FileFormat("PLY header missing elements");
  TriMesh mesh;
  mesh.vertices.reserve(nv);
  for (int i = 0; i < nv; ++i) {
    if (!std::getline(in, line)) throw FileFormat("PLY truncated");
    std::istringstream ss(line);
    Vec3 p;
    ss >> p.x() >> p.y() >> p.z();
    if (!ss) throw FileFormat("bad PLY vertex line: " + line);
    mesh.vertices.push_back(p * scale);
  }
  for (int i = 0; i < nf; ++i) {
    if (!std::getline(in, line)) throw FileFormat("PLY truncated");
    std::istringstream ss(line);
    int n;
    ss >> n;
    std::vector<int> idx(n);
    for (int k = 0; k < n; ++k) ss >> idx[k];
    if (!ss || n < 3) throw FileFormat("bad PLY face line: " + line);
    for (int k = 1; k + 1 < n; ++k)
      mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
  }
  return mesh;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TriMesh load_mesh(const std::string& path, double scale) {
  std::ifstream in(path);
  if (!in) throw FileFormat("cannot open mesh file: " + path);
  TriMesh mesh;
  if (ends_with(path, ".obj"))
    mesh = load_obj(in, scale);
  else if (ends_with(path, ".ply"))
    mesh = load_ply(in, scale);
  else
    throw FileFormat("unsupported mesh extension: " + path);
  return compute_normals(std::move(mesh));
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write mesh file: " + path);
  char buf[128];
  if (ends_with(path, ".obj")) {
    for (const Vec3& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(),
                    v.z());
      out << buf;
    }
    for (const auto& f : mesh.faces)
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  } else if (ends_with(path, ".ply")) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.num_vertices() << '\n';
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "element face " << mesh.num_faces() << '\n';
    out << "property list uchar int vertex_indices\nend_header\n";
    for (const Vec3& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x(), v.y(), v.z());
      out << buf;
    }
    for (const auto& f : mesh.faces)
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  } else {
    throw FileFormat("unsupported mesh extension: " + path);
  }
}

TriMesh make_box(const Vec3& center, const Vec3& full_extents) {
  const Vec3 h = full_extents / 2.0;
  TriMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(),
                                          (i & 2) ? h.y() : -h.y(),
                                          (i & 4) ? h.z() : -h.z()));
  }
  // 12 triangles, outward CCW winding. Each quad starts on the alternating
  // corner subset so the split diagonals are symmetric and corner normals
  // come out along the cube diagonals.
  const int quads[6][4] = {
      {0, 4, 6, 2},  // -x
      {3, 7, 5, 1},  // +x
      {0, 1, 5, 4},  // -y
      {6, 7, 3, 2},  // +y
      {0, 2, 3, 1},  // -z
      {5, 7, 6, 4},  // +z
  };
  for (const auto& q : quads) {
    mesh.faces.push_back({q[0], q[1], q[2]});
    mesh.faces.push_back({q[0], q[2], q[3]});
  }
  return compute_normals(std::move(mesh));
}

TriMesh make_grid_box(const Vec3& center, const Vec3& full_extents, int nx,
                      int ny, int nz) {
  const Vec3 lo = center - full_extents / 2.0;
  const Vec3 step(full_extents.x() / nx, full_extents.y() / ny,
                  full_extents.z() / nz);
  TriMesh mesh;
  std::map<std::array<int, 3>, int> lattice;
  auto vert = [&](int i, int j, int k) {
    const std::array<int, 3> key{i, j, k};
    auto it = lattice.find(key);
    if (it != lattice.end()) return it->second;
    mesh.vertices.push_back(lo + Vec3(i * step.x(), j * step.y(),
                                      k * step.z()));
    const int idx = static_cast<int>(mesh.vertices.size()) - 1;
    lattice[key] = idx;
    return idx;
  };
  auto quad = [&](int a, int b, int c, int d) {
    mesh.faces.push_back({a, b, c});
    mesh.faces.push_back({a, c, d});
  };
  for (int j = 0; j < ny; ++j)
    for (int k = 0; k < nz; ++k) {
      quad(vert(0, j, k), vert(0, j, k + 1), vert(0, j + 1, k + 1),
           vert(0, j + 1, k));
      quad(vert(nx, j, k), vert(nx, j + 1, k), vert(nx, j + 1, k + 1),
           vert(nx, j, k + 1));
    }
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < nz; ++k) {
      quad(vert(i, 0, k), vert(i + 1, 0, k), vert(i + 1, 0, k + 1),
           vert(i, 0, k + 1));
      quad(vert(i, ny, k), vert(i, ny, k + 1), vert(i + 1, ny, k + 1),
           vert(i + 1, ny, k));
    }
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      quad(vert(i, j, 0), vert(i, j + 1, 0), vert(i + 1, j + 1, 0),
           vert(i + 1, j, 0));
      quad(vert(i, j, nz), vert(i + 1, j, nz), vert(i + 1, j + 1, nz),
           vert(i, j + 1, nz));
    }
  return compute_normals(std::move(mesh));
}

TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]),
                ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriMesh mesh;
  mesh.faces = std::move(faces);
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(center + radius * v);
  return compute_normals(std::move(mesh));
}

TriMesh make_cylinder(double radius, double height, int segments,
                      const Vec3& center) {
  TriMesh mesh;
  const double hz = height / 2.0;
  // enough rings that the barrel quads stay roughly square; vertex-based
  // consumers need uniform coverage along the axis, not just the end rings
  const double seg_len = 2.0 * M_PI * radius / segments;
  const int bands =
      std::max(1, static_cast<int>(std::lround(height / seg_len)));
  for (int ring = 0; ring <= bands; ++ring) {
    const double z = -hz + height * ring / bands;
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * M_PI * s / segments;
      mesh.vertices.push_back(
          center + Vec3(radius * std::cos(a), radius * std::sin(a), z));
    }
  }
  const int bot_center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(center + Vec3(0, 0, -hz));
  const int top_center = bot_center + 1;
  mesh.vertices.push_back(center + Vec3(0, 0, hz));
  for (int ring = 0; ring < bands; ++ring) {
    for (int s = 0; s < segments; ++s) {
      const int sn = (s + 1) % segments;
      const int b0 = ring * segments + s, b1 = ring * segments + sn;
      const int t0 = b0 + segments, t1 = b1 + segments;
      mesh.faces.push_back({b0, b1, t1});
      mesh.faces.push_back({b0, t1, t0});
    }
  }
  const int top_ring = bands * segments;
  for (int s = 0; s < segments; ++s) {
    const int sn = (s + 1) % segments;
    mesh.faces.push_back({bot_center, sn, s});
    mesh.faces.push_back({top_center, top_ring + s, top_ring + sn});
  }
  return compute_normals(std::move(mesh));
}

TriMesh transformed(const TriMesh& mesh, const Eigen::Matrix3d& rotation,
                    const Vec3& translation) {
  TriMesh out = mesh;
  for (Vec3& v : out.vertices) v = rotation * v + translation;
  return compute_normals(std::move(out));
}

}  // namespace contactfit
