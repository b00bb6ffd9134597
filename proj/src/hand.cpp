#include "contactfit/hand.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>

#include "contactfit/errors.hpp"
#include "json.hpp"

namespace contactfit {

using json = nlohmann::json;
using Mat3 = Eigen::Matrix3d;

Eigen::VectorXd HandParams::to_vector() const {
  Eigen::VectorXd x(dim());
  x.head(theta.size()) = theta;
  x.segment(theta.size(), beta.size()) = beta;
  x.segment(theta.size() + beta.size(), 3) = translation;
  x.tail(3) = rotation;
  return x;
}

HandParams HandParams::from_vector(const Eigen::VectorXd& x, int n_theta,
                                   int n_beta) {
  if (x.size() != n_theta + n_beta + 6)
    throw DimensionMismatch("parameter vector has wrong length");
  HandParams p;
  p.theta = x.head(n_theta);
  p.beta = x.segment(n_theta, n_beta);
  p.translation = x.segment(n_theta + n_beta, 3);
  p.rotation = x.tail(3);
  return p;
}

HandParams HandModel::zero_params() const {
  HandParams p;
  p.theta = Eigen::VectorXd::Zero(num_pose_coeffs());
  p.beta = Eigen::VectorXd(0);
  return p;
}

void HandModel::validate() const {
  const int nj = num_joints();
  const int nv = rest_mesh.num_vertices();
  if (nj == 0 || nv == 0) throw DimensionMismatch("empty hand model");
  if (static_cast<int>(parents.size()) != nj)
    throw DimensionMismatch("parents size mismatch");
  if (parents[0] != -1) throw DimensionMismatch("joint 0 must be the root");
  for (int j = 1; j < nj; ++j)
    if (parents[j] < 0 || parents[j] >= j)
      throw DimensionMismatch("parents must form a tree with parents[j] < j");
  if (skinning_weights.rows() != nv || skinning_weights.cols() != nj)
    throw DimensionMismatch("skinning weight matrix shape mismatch");
  for (int v = 0; v < nv; ++v) {
    double sum = 0.0;
    int nonzero = 0;
    for (int j = 0; j < nj; ++j) {
      const double w = skinning_weights(v, j);
      if (w < -1e-9) throw DimensionMismatch("negative skinning weight");
      if (w > 1e-12) ++nonzero;
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw DimensionMismatch("skinning weight row does not sum to 1");
    if (nonzero > 8)
      throw DimensionMismatch("more than 8 skinning weights on a vertex");
  }
  if (pose_basis.rows() != 3 * nj || pose_mean.size() != 3 * nj)
    throw DimensionMismatch("pose subspace shape mismatch");
  if (pose_basis.cols() > 3 * nj)
    throw DimensionMismatch("pose basis has too many columns");
  if (pose_basis.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pose_basis);
    const double tol = 1e-9 * svd.singularValues()(0);
    if (svd.singularValues()(svd.singularValues().size() - 1) <= tol)
      throw DimensionMismatch("pose basis columns are linearly dependent");
  }
  if (shape_basis.cols() > 0 && shape_basis.rows() != 3 * nv)
    throw DimensionMismatch("shape basis shape mismatch");
}

Mat3 axis_angle_to_matrix(const Vec3& a, Mat3* jac) {
  const double theta2 = a.squaredNorm();
  auto skew = [](const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
  };
  if (theta2 < 1e-16) {
    const Mat3 r = Mat3::Identity() + skew(a);
    if (jac)
      for (int i = 0; i < 3; ++i) jac[i] = skew(Vec3::Unit(i));
    return r;
  }
  const double theta = std::sqrt(theta2);
  const Vec3 axis = a / theta;
  const Mat3 k = skew(axis);
  const Mat3 r = Mat3::Identity() + std::sin(theta) * k +
                 (1.0 - std::cos(theta)) * k * k;
  if (jac) {
    // Gallego & Yezzi, "A compact formula for the derivative of a 3-D
    // rotation in exponential coordinates"
    for (int i = 0; i < 3; ++i) {
      const Vec3 ei = Vec3::Unit(i);
      jac[i] = (a(i) * skew(a) + skew(a.cross((Mat3::Identity() - r) * ei))) *
               r / theta2;
    }
  }
  return r;
}

Vec3 matrix_to_axis_angle(const Mat3& rot) {
  const Eigen::AngleAxisd aa(rot);
  return canonicalize_rotation(aa.angle() * aa.axis());
}

Vec3 canonicalize_rotation(const Vec3& rotation) {
  const double theta = rotation.norm();
  if (theta < 1e-300) return Vec3::Zero();
  double wrapped = std::fmod(theta, 2.0 * M_PI);
  Vec3 axis = rotation / theta;
  if (wrapped > M_PI) {
    wrapped = 2.0 * M_PI - wrapped;
    axis = -axis;
  }
  return wrapped * axis;
}

namespace {

struct JointTransforms {
  std::vector<Mat3> rot;   // world rotation per joint
  std::vector<Vec3> pos;   // posed joint position (before global transform)
  std::vector<Mat3> local; // local rotation per joint
};

JointTransforms forward_kinematics(const HandModel& model,
                                   const Eigen::VectorXd& axis_angles) {
  const int nj = model.num_joints();
  JointTransforms t;
  t.rot.resize(nj);
  t.pos.resize(nj);
  t.local.resize(nj);
  for (int j = 0; j < nj; ++j) {
    t.local[j] = axis_angle_to_matrix(axis_angles.segment<3>(3 * j));
    const int p = model.parents[j];
    if (p < 0) {
      t.rot[j] = t.local[j];
      t.pos[j] = model.joints_rest[j];
    } else {
      t.rot[j] = t.rot[p] * t.local[j];
      t.pos[j] = t.rot[p] * (model.joints_rest[j] - model.joints_rest[p]) +
                 t.pos[p];
    }
  }
  return t;
}

std::vector<Vec3> rest_vertices(const HandModel& model,
                                const Eigen::VectorXd& beta) {
  std::vector<Vec3> v0 = model.rest_mesh.vertices;
  if (beta.size() > 0) {
    if (beta.size() != model.shape_basis.cols())
      throw DimensionMismatch("beta dimension mismatch");
    const Eigen::VectorXd disp = model.shape_basis * beta;
    for (size_t i = 0; i < v0.size(); ++i)
      v0[i] += disp.segment<3>(3 * static_cast<int>(i));
  }
  return v0;
}

void check_params(const HandModel& model, const HandParams& params) {
  if (params.theta.size() != model.num_pose_coeffs())
    throw DimensionMismatch("theta dimension mismatch");
  if (params.beta.size() != 0 &&
      params.beta.size() != model.num_shape_coeffs())
    throw DimensionMismatch("beta dimension mismatch");
}

}  // namespace

PosedHand pose_hand(const HandModel& model, const HandParams& params) {
  check_params(model, params);
  const Eigen::VectorXd aa = model.pose_mean + model.pose_basis * params.theta;
  const JointTransforms t = forward_kinematics(model, aa);
  const std::vector<Vec3> v0 = rest_vertices(model, params.beta);
  const Mat3 rg = axis_angle_to_matrix(params.rotation);

  PosedHand out;
  out.mesh.faces = model.rest_mesh.faces;
  out.mesh.vertices.resize(v0.size());
  const int nj = model.num_joints();
  for (int v = 0; v < static_cast<int>(v0.size()); ++v) {
    Vec3 skinned = Vec3::Zero();
    for (int j = 0; j < nj; ++j) {
      const double w = model.skinning_weights(v, j);
      if (w == 0.0) continue;
      skinned += w * (t.rot[j] * (v0[v] - model.joints_rest[j]) + t.pos[j]);
    }
    out.mesh.vertices[v] = rg * skinned + params.translation;
  }
  out.mesh = compute_normals(std::move(out.mesh));
  out.joints.resize(nj);
  for (int j = 0; j < nj; ++j)
    out.joints[j] = rg * t.pos[j] + params.translation;
  return out;
}

Eigen::MatrixXd pose_jacobian(const HandModel& model, const HandParams& params,
                              const std::vector<int>& vertex_subset) {
  check_params(model, params);
  const int nk = model.num_pose_coeffs();
  const int nb = static_cast<int>(params.beta.size());
  const int dim = nk + nb + 6;
  const int nj = model.num_joints();
  const int nv = model.rest_mesh.num_vertices();

  const Eigen::VectorXd aa = model.pose_mean + model.pose_basis * params.theta;
  const std::vector<Vec3> v0 = rest_vertices(model, params.beta);

  // forward kinematics with per-joint rotation derivatives
  std::vector<Mat3> local(nj), local_jac(3 * nj);
  for (int j = 0; j < nj; ++j)
    local[j] = axis_angle_to_matrix(aa.segment<3>(3 * j), &local_jac[3 * j]);
  std::vector<Mat3> rot(nj);
  std::vector<Vec3> pos(nj);
  // d(rot)/d(theta_k), d(pos)/d(theta_k) per joint, forward mode
  std::vector<Mat3> drot(static_cast<size_t>(nj) * nk);
  std::vector<Vec3> dpos(static_cast<size_t>(nj) * nk);
  for (int j = 0; j < nj; ++j) {
    const int p = model.parents[j];
    for (int k = 0; k < nk; ++k) {
      Mat3 dlocal = Mat3::Zero();
      for (int c = 0; c < 3; ++c)
        dlocal += model.pose_basis(3 * j + c, k) * local_jac[3 * j + c];
      if (p < 0) {
        drot[j * nk + k] = dlocal;
        dpos[j * nk + k] = Vec3::Zero();
      } else {
        drot[j * nk + k] =
            drot[p * nk + k] * local[j] + rot[p] * dlocal;
        dpos[j * nk + k] =
            drot[p * nk + k] * (model.joints_rest[j] - model.joints_rest[p]) +
            dpos[p * nk + k];
      }
    }
    if (p < 0) {
      rot[j] = local[j];
      pos[j] = model.joints_rest[j];
    } else {
      rot[j] = rot[p] * local[j];
      pos[j] = rot[p] * (model.joints_rest[j] - model.joints_rest[p]) + pos[p];
    }
  }

  Mat3 global_jac[3];
  const Mat3 rg = axis_angle_to_matrix(params.rotation, global_jac);

  Eigen::MatrixXd jac(3 * vertex_subset.size(), dim);
  for (size_t s = 0; s < vertex_subset.size(); ++s) {
    const int v = vertex_subset[s];
    if (v < 0 || v >= nv) throw DimensionMismatch("vertex index out of range");
    Vec3 skinned = Vec3::Zero();
    for (int j = 0; j < nj; ++j) {
      const double w = model.skinning_weights(v, j);
      if (w == 0.0) continue;
      skinned += w * (rot[j] * (v0[v] - model.joints_rest[j]) + pos[j]);
    }
    // theta columns
    for (int k = 0; k < nk; ++k) {
      Vec3 d = Vec3::Zero();
      for (int j = 0; j < nj; ++j) {
        const double w = model.skinning_weights(v, j);
        if (w == 0.0) continue;
        d += w * (drot[j * nk + k] * (v0[v] - model.joints_rest[j]) +
                  dpos[j * nk + k]);
      }
      jac.block<3, 1>(3 * s, k) = rg * d;
    }
    // beta columns
    for (int b = 0; b < nb; ++b) {
      const Vec3 dv0 = model.shape_basis.block<3, 1>(3 * v, b);
      Vec3 d = Vec3::Zero();
      for (int j = 0; j < nj; ++j) {
        const double w = model.skinning_weights(v, j);
        if (w == 0.0) continue;
        d += w * (rot[j] * dv0);
      }
      jac.block<3, 1>(3 * s, nk + b) = rg * d;
    }
    // translation columns
    jac.block<3, 3>(3 * s, nk + nb) = Mat3::Identity();
    // global rotation columns
    for (int i = 0; i < 3; ++i)
      jac.block<3, 1>(3 * s, nk + nb + 3 + i) = global_jac[i] * skinned;
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Model file IO

namespace {

json vec3_list_to_json(const std::vector<Vec3>& v) {
  json arr = json::array();
  for (const Vec3& p : v) arr.push_back({p.x(), p.y(), p.z()});
  return arr;
}

std::vector<Vec3> vec3_list_from_json(const json& arr) {
  std::vector<Vec3> out;
  for (const auto& p : arr) out.emplace_back(p.at(0), p.at(1), p.at(2));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index cols_hint) {
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  Eigen::Index nc = cols_hint;
  if (nr > 0) nc = static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r)
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows.at(r).at(c);
  return m;
}

}  // namespace

HandModel load_hand_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormat("cannot open hand model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FileFormat("bad hand model JSON: " + std::string(e.what()));
  }
  HandModel model;
  try {
    if (j.at("format") != "contactfit-hand")
      throw FileFormat("not a contactfit hand model file");
    model.rest_mesh.vertices = vec3_list_from_json(j.at("vertices"));
    for (const auto& f : j.at("faces"))
      model.rest_mesh.faces.push_back({f.at(0), f.at(1), f.at(2)});
    model.joints_rest = vec3_list_from_json(j.at("joints"));
    model.parents = j.at("parents").get<std::vector<int>>();
    model.skinning_weights = matrix_from_json(j.at("skinning_weights"), 0);
    model.pose_basis = matrix_from_json(j.at("pose_basis"), 0);
    const auto mean = j.at("pose_mean").get<std::vector<double>>();
    model.pose_mean =
        Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    if (j.contains("shape_basis"))
      model.shape_basis = matrix_from_json(j.at("shape_basis"), 0);
    else
      model.shape_basis.resize(3 * model.rest_mesh.num_vertices(), 0);
  } catch (const json::exception& e) {
    throw FileFormat("bad hand model JSON: " + std::string(e.what()));
  }
  model.rest_mesh = compute_normals(std::move(model.rest_mesh));
  model.validate();
  return model;
}

void save_hand_model(const HandModel& model, const std::string& path) {
  json j;
  j["format"] = "contactfit-hand";
  j["version"] = 1;
  j["joints"] = vec3_list_to_json(model.joints_rest);
  j["parents"] = model.parents;
  j["vertices"] = vec3_list_to_json(model.rest_mesh.vertices);
  json faces = json::array();
  for (const auto& f : model.rest_mesh.faces)
    faces.push_back({f[0], f[1], f[2]});
  j["faces"] = faces;
  j["skinning_weights"] = matrix_to_json(model.skinning_weights);
  j["pose_basis"] = matrix_to_json(model.pose_basis);
  j["pose_mean"] = std::vector<double>(
      model.pose_mean.data(), model.pose_mean.data() + model.pose_mean.size());
  if (model.shape_basis.cols() > 0)
    j["shape_basis"] = matrix_to_json(model.shape_basis);
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write hand model: " + path);
  out << j.dump();
}

// ---------------------------------------------------------------------------
// Synthetic test hand

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t =
      std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

void append_mesh(TriMesh& dst, const TriMesh& src) {
  const int offset = dst.num_vertices();
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(),
                      src.vertices.end());
  for (const auto& f : src.faces)
    dst.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
}

}  // namespace

HandModel make_synthetic_hand() {
  HandModel model;
  // Joints: 0 palm root, 1-2 finger A, 3-4 finger B, 5-6 thumb.
  model.joints_rest = {
      {-20, 0, 0},                     // 0 root (palm)
      {0, 13, 0},  {27, 13, 0},        // finger A knuckle, mid
      {0, -13, 0}, {27, -13, 0},       // finger B knuckle, mid
      {-40, 0, 0}, {-62, 0, 0},        // thumb knuckle, mid
  };
  model.parents = {-1, 0, 1, 0, 3, 0, 5};
  const int nj = 7;

  // Bone segments used for mesh placement and skinning.
  const std::array<std::pair<Vec3, Vec3>, 7> bones = {{
      {{-40, 0, 0}, {0, 0, 0}},        // palm
      {{0, 13, 0}, {27, 13, 0}},       // finger A proximal
      {{27, 13, 0}, {52, 13, 0}},      // finger A distal
      {{0, -13, 0}, {27, -13, 0}},     // finger B proximal
      {{27, -13, 0}, {52, -13, 0}},    // finger B distal
      {{-40, 0, 0}, {-62, 0, 0}},      // thumb proximal
      {{-62, 0, 0}, {-84, 0, 0}},      // thumb distal
  }};

  TriMesh mesh = make_grid_box({-20, 0, 0}, {40, 44, 18}, 6, 6, 3);  // palm
  // finger A
  append_mesh(mesh, make_grid_box({13.5, 13, 0}, {29, 11, 11}, 5, 2, 2));
  append_mesh(mesh, make_grid_box({40, 13, 0}, {28, 9, 9}, 5, 2, 2));
  // finger B
  append_mesh(mesh, make_grid_box({13.5, -13, 0}, {29, 11, 11}, 5, 2, 2));
  append_mesh(mesh, make_grid_box({40, -13, 0}, {28, 9, 9}, 5, 2, 2));
  // thumb
  append_mesh(mesh, make_grid_box({-51, 0, 0}, {24, 12, 12}, 5, 2, 2));
  append_mesh(mesh, make_grid_box({-73.5, 0, 0}, {25, 10, 10}, 5, 2, 2));
  model.rest_mesh = compute_normals(std::move(mesh));

  const int nv = model.rest_mesh.num_vertices();
  model.skinning_weights = Eigen::MatrixXd::Zero(nv, nj);
  const double sigma = 5.0;  // mm
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = model.rest_mesh.vertices[v];
    Eigen::VectorXd w(nj);
    int nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nj; ++j) {
      const double d =
          point_segment_distance(p, bones[j].first, bones[j].second);
      w(j) = std::exp(-(d * d) / (2.0 * sigma * sigma));
      if (d < nearest_d) {
        nearest_d = d;
        nearest = j;
      }
    }
    // keep the 4 largest weights
    std::vector<int> idx(nj);
    for (int j = 0; j < nj; ++j) idx[j] = j;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return w(a) > w(b); });
    for (int r = 4; r < nj; ++r) w(idx[r]) = 0.0;
    if (w.sum() < 1e-12) {
      w.setZero();
      w(nearest) = 1.0;
    }
    model.skinning_weights.row(v) = w / w.sum();
  }

  // Pose subspace: per-digit curl (both joints) and proximal-only bend.
  // All flexion rotates about +y for fingers (curling +x toward -z) and
  // about -y for the thumb (curling -x toward -z).
  const int nk = 6;
  model.pose_basis = Eigen::MatrixXd::Zero(3 * nj, nk);
  auto set_y = [&](int joint, int col, double v) {
    model.pose_basis(3 * joint + 1, col) = v;
  };
  set_y(1, 0, 0.7);
  set_y(2, 0, 0.7);  // finger A curl
  set_y(3, 1, 0.7);
  set_y(4, 1, 0.7);  // finger B curl
  set_y(5, 2, -0.7);
  set_y(6, 2, -0.7);  // thumb curl
  set_y(1, 3, 1.0);   // finger A proximal
  set_y(3, 4, 1.0);   // finger B proximal
  set_y(5, 5, -1.0);  // thumb proximal
  model.pose_mean = Eigen::VectorXd::Zero(3 * nj);
  model.shape_basis.resize(3 * nv, 0);
  model.validate();
  return model;
}

}  // namespace contactfit
