#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "contactfit/mesh.hpp"

namespace contactfit {

// Optimization variable: pose coefficients, shape coefficients, global
// translation (mm) and rotation (axis-angle, radians), w.r.t. the object.
struct HandParams {
  Eigen::VectorXd theta;
  Eigen::VectorXd beta;  // may be empty (fixed shape)
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  int dim() const {
    return static_cast<int>(theta.size() + beta.size()) + 6;
  }
  // Flat layout [theta, beta, translation, rotation]; used for Jacobian
  // columns and the optimizer state.
  Eigen::VectorXd to_vector() const;
  static HandParams from_vector(const Eigen::VectorXd& x, int n_theta,
                                int n_beta);
};

// Parametric articulated hand: rest mesh, skeleton, skinning weights and a
// linear pose subspace mapping coefficients to per-joint axis-angle
// rotations.
struct HandModel {
  TriMesh rest_mesh;
  std::vector<Vec3> joints_rest;
  std::vector<int> parents;          // -1 for the root, parents[j] < j
  Eigen::MatrixXd skinning_weights;  // V x J, rows sum to 1
  Eigen::MatrixXd pose_basis;        // 3J x K
  Eigen::VectorXd pose_mean;         // 3J
  Eigen::MatrixXd shape_basis;       // 3V x B (0 columns when shape is fixed)

  int num_joints() const { return static_cast<int>(joints_rest.size()); }
  int num_pose_coeffs() const { return static_cast<int>(pose_basis.cols()); }
  int num_shape_coeffs() const { return static_cast<int>(shape_basis.cols()); }

  HandParams zero_params() const;
  // Throws DimensionMismatch / FileFormat if any structural invariant fails.
  void validate() const;
};

struct PosedHand {
  TriMesh mesh;
  std::vector<Vec3> joints;
};

// Linear-blend skinning under the pose subspace, then the global rigid
// transform. Normals are recomputed on the posed mesh.
PosedHand pose_hand(const HandModel& model, const HandParams& params);

// Analytic d(vertex position)/d(params) for the selected vertices, as a
// (3*subset) x dim(params) matrix with the flat parameter layout of
// HandParams::to_vector. Validated against finite differences in tests.
Eigen::MatrixXd pose_jacobian(const HandModel& model, const HandParams& params,
                              const std::vector<int>& vertex_subset);

// Same rotation with magnitude in [0, pi].
Vec3 canonicalize_rotation(const Vec3& rotation);

// Rodrigues rotation. When jac != nullptr it receives dR/da_i, i = 0..2.
Eigen::Matrix3d axis_angle_to_matrix(const Vec3& a,
                                     Eigen::Matrix3d* jac = nullptr);
Vec3 matrix_to_axis_angle(const Eigen::Matrix3d& rot);

// JSON model file.
HandModel load_hand_model(const std::string& path);
void save_hand_model(const HandModel& model, const std::string& path);

// Procedurally generated test hand: two fingers and an opposing thumb,
// 7 joints, roughly 500 vertices, watertight. Fingers extend along +x and
// curl toward -z; the thumb opposes from -x. Pose coefficients: one curl
// per digit, one proximal-only bend per digit.
HandModel make_synthetic_hand();

}  // namespace contactfit
