#include "contactfit/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contactfit/errors.hpp"

namespace contactfit {

double capsule_distance(const Vec3& query, const Vec3& anchor,
                        const Vec3& normal, const CapsuleConfig& cfg) {
  const Vec3 bot = anchor - cfg.c_bot * normal;
  const Vec3 seg = (cfg.c_top + cfg.c_bot) * normal;
  const double len2 = seg.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(seg.dot(query - bot) / len2, 0.0, 1.0);
  return (query - (bot + t * seg)).norm();
}

double contact_value(double phi, const CapsuleConfig& cfg) {
  if (phi <= cfg.c_rad) return 1.0;
  return cfg.c_rad / phi;
}

namespace {

Vec3 closest_point_on_capsule_axis(const Vec3& query, const Vec3& anchor,
                                   const Vec3& normal,
                                   const CapsuleConfig& cfg) {
  const Vec3 bot = anchor - cfg.c_bot * normal;
  const Vec3 seg = (cfg.c_top + cfg.c_bot) * normal;
  const double len2 = seg.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(seg.dot(query - bot) / len2, 0.0, 1.0);
  return bot + t * seg;
}

// Exact argmin of capsule_distance over the indexed points. The capsule
// axis lies within max(c_top, c_bot) of the anchor, so every point farther
// than (euclidean nearest) + that extent cannot win.
void min_phi(const PointIndex& points, const Vec3& anchor, const Vec3& normal,
             const CapsuleConfig& cfg, int& best_idx, double& best_phi) {
  const auto [near_idx, near_d] = points.nearest(anchor);
  (void)near_idx;
  const double extent = std::max(cfg.c_top, cfg.c_bot);
  const std::vector<int> candidates =
      points.within(anchor, near_d + extent);
  best_idx = -1;
  best_phi = std::numeric_limits<double>::infinity();
  for (const int idx : candidates) {
    const double phi =
        capsule_distance(points.points()[idx], anchor, normal, cfg);
    if (phi < best_phi) {
      best_phi = phi;
      best_idx = idx;
    }
  }
}

void check_mesh(const TriMesh& mesh, const char* name) {
  if (mesh.vertices.empty()) throw EmptyMesh(std::string(name) + " is empty");
  if (mesh.vertex_normals.size() != mesh.vertices.size())
    throw DimensionMismatch(std::string(name) + " is missing vertex normals");
}

}  // namespace

ContactResult contact_maps(const TriMesh& object, const TriMesh& hand,
                           const CapsuleConfig& cfg,
                           const PointIndex& object_index,
                           const PointIndex& hand_index) {
  check_mesh(object, "object mesh");
  check_mesh(hand, "hand mesh");
  const int no = object.num_vertices();
  const int nh = hand.num_vertices();

  ContactResult out;
  out.object_map.side = ContactMap::Side::object;
  out.object_map.values.resize(no);
  out.object_corr.nearest.resize(no);
  out.object_corr.phi.resize(no);
  for (int i = 0; i < no; ++i) {
    int idx;
    double phi;
    min_phi(hand_index, object.vertices[i], object.vertex_normals[i], cfg,
            idx, phi);
    out.object_corr.nearest[i] = idx;
    out.object_corr.phi[i] = phi;
    out.object_map.values[i] = contact_value(phi, cfg);
  }

  out.hand_map.side = ContactMap::Side::hand;
  out.hand_map.values.resize(nh);
  out.hand_corr.nearest.resize(nh);
  out.hand_corr.phi.resize(nh);
  for (int i = 0; i < nh; ++i) {
    int idx;
    double phi;
    min_phi(object_index, hand.vertices[i], hand.vertex_normals[i], cfg, idx,
            phi);
    out.hand_corr.nearest[i] = idx;
    out.hand_corr.phi[i] = phi;
    out.hand_map.values[i] = contact_value(phi, cfg);
  }
  return out;
}

ContactResult contact_maps(const TriMesh& object, const TriMesh& hand,
                           const CapsuleConfig& cfg) {
  check_mesh(object, "object mesh");
  check_mesh(hand, "hand mesh");
  const PointIndex object_index(object.vertices);
  const PointIndex hand_index(hand.vertices);
  return contact_maps(object, hand, cfg, object_index, hand_index);
}

Vec3 contact_grad_wrt_hand_vertex(const TriMesh& object, const TriMesh& hand,
                                  const ContactResult& result,
                                  const CapsuleConfig& cfg,
                                  ContactMap::Side side, int index) {
  if (side == ContactMap::Side::object) {
    const double phi = result.object_corr.phi[index];
    if (phi <= cfg.c_rad) return Vec3::Zero();  // clamped branch
    const int j = result.object_corr.nearest[index];
    const Vec3& x = hand.vertices[j];
    const Vec3 cp = closest_point_on_capsule_axis(
        x, object.vertices[index], object.vertex_normals[index], cfg);
    // d/dx min(c_rad/phi, 1) = -c_rad/phi^2 * (x - cp)/phi
    return (-cfg.c_rad / (phi * phi)) * (x - cp) / phi;
  }
  const double phi = result.hand_corr.phi[index];
  if (phi <= cfg.c_rad) return Vec3::Zero();
  const int o = result.hand_corr.nearest[index];
  const Vec3& q = object.vertices[o];
  const Vec3 cp = closest_point_on_capsule_axis(
      q, hand.vertices[index], hand.vertex_normals[index], cfg);
  // capsule direction held fixed; translating the capsule with the hand
  // vertex gives d phi / d v = -(q - cp)/phi
  return (cfg.c_rad / (phi * phi)) * (q - cp) / phi;
}

Eigen::MatrixXd contact_maps_grad(const TriMesh& object, const TriMesh& hand,
                                  const ContactResult& result,
                                  const CapsuleConfig& cfg,
                                  const Eigen::MatrixXd& hand_jacobian,
                                  ContactMap::Side side) {
  const int nh = hand.num_vertices();
  if (result.object_map.size() != object.num_vertices() ||
      result.hand_map.size() != nh)
    throw StaleCorrespondence("contact result does not match the meshes");
  if (hand_jacobian.rows() != 3 * nh)
    throw StaleCorrespondence("hand Jacobian does not cover all vertices");

  const int n = side == ContactMap::Side::object ? object.num_vertices() : nh;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, hand_jacobian.cols());
  for (int i = 0; i < n; ++i) {
    const Vec3 g =
        contact_grad_wrt_hand_vertex(object, hand, result, cfg, side, i);
    if (g.isZero()) continue;
    const int j = side == ContactMap::Side::object
                      ? result.object_corr.nearest[i]
                      : i;
    grad.row(i) = g.transpose() * hand_jacobian.middleRows<3>(3 * j);
  }
  return grad;
}

}  // namespace contactfit
