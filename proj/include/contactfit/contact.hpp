#pragma once

#include <Eigen/Core>
#include <vector>

#include "contactfit/kdtree.hpp"
#include "contactfit/mesh.hpp"

namespace contactfit {

// Virtual capsule around a surface vertex: a line segment along the vertex
// normal from -c_bot (inside) to +c_top (outside), with full contact inside
// radius c_rad. c_bot > c_top lets contact extend farther into the mesh,
// approximating soft-tissue deformation.
struct CapsuleConfig {
  double c_top = 0.5;  // mm
  double c_bot = 1.0;  // mm
  double c_rad = 1.0;  // mm
};

struct ContactMap {
  enum class Side { hand, object };
  Side side = Side::object;
  Eigen::VectorXd values;  // per vertex, in [0, 1]

  int size() const { return static_cast<int>(values.size()); }
};

// For each vertex of one mesh: the opposing vertex whose capsule it is
// closest to (for capsules on the opposing mesh) or the opposing vertex
// closest to its own capsule, plus the cached segment distance.
struct ContactCorrespondence {
  std::vector<int> nearest;
  Eigen::VectorXd phi;  // mm
};

struct ContactResult {
  ContactMap object_map;  // contact at object vertices
  ContactMap hand_map;    // contact at hand vertices
  ContactCorrespondence object_corr;  // object vertex -> hand vertex
  ContactCorrespondence hand_corr;    // hand vertex -> object vertex
};

// Distance from `query` to the capsule axis segment anchored at `anchor`
// along unit `normal`.
double capsule_distance(const Vec3& query, const Vec3& anchor,
                        const Vec3& normal, const CapsuleConfig& cfg);

// min(c_rad / phi, 1), with phi = 0 mapping to 1.
double contact_value(double phi, const CapsuleConfig& cfg);

// Contact maps in both directions. Capsules sit at object vertices along
// object normals (for the object map) and at hand vertices along hand
// normals (for the hand map). Equals the all-pairs minimum exactly.
ContactResult contact_maps(const TriMesh& object, const TriMesh& hand,
                           const CapsuleConfig& cfg = {});

// Same, reusing prebuilt vertex indices (the optimizer rebuilds the hand
// index every iteration).
ContactResult contact_maps(const TriMesh& object, const TriMesh& hand,
                           const CapsuleConfig& cfg,
                           const PointIndex& object_index,
                           const PointIndex& hand_index);

// Gradient of every contact value of one side w.r.t. the hand parameters,
// with the correspondence (and hand capsule directions) held fixed:
// rows = vertices of that side, cols = dim(P). `hand_jacobian` must cover
// all hand vertices (3V x dim). Throws StaleCorrespondence on size mismatch.
Eigen::MatrixXd contact_maps_grad(const TriMesh& object, const TriMesh& hand,
                                  const ContactResult& result,
                                  const CapsuleConfig& cfg,
                                  const Eigen::MatrixXd& hand_jacobian,
                                  ContactMap::Side side);

// d(contact at entry i)/d(position of its corresponding hand vertex).
// Zero in the saturated region (phi <= c_rad). Used by both
// contact_maps_grad and the loss gradients.
Vec3 contact_grad_wrt_hand_vertex(const TriMesh& object, const TriMesh& hand,
                                  const ContactResult& result,
                                  const CapsuleConfig& cfg,
                                  ContactMap::Side side, int index);

}  // namespace contactfit
