#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "contactfit/config.hpp"
#include "contactfit/dataset.hpp"
#include "contactfit/errors.hpp"
#include "contactfit/metrics.hpp"
#include "contactfit/optimize.hpp"
#include "contactfit/rng.hpp"
#include "contactfit/sdf.hpp"
#include "contactfit/target.hpp"

namespace py = pybind11;
using namespace contactfit;

namespace {

Eigen::MatrixXd vertices_array(const TriMesh& mesh) {
  Eigen::MatrixXd out(mesh.num_vertices(), 3);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out.row(v) = mesh.vertices[v].transpose();
  return out;
}

Eigen::MatrixXi faces_array(const TriMesh& mesh) {
  Eigen::MatrixXi out(mesh.num_faces(), 3);
  for (int f = 0; f < mesh.num_faces(); ++f)
    for (int k = 0; k < 3; ++k) out(f, k) = mesh.faces[f][k];
  return out;
}

Eigen::MatrixXd normals_array(const TriMesh& mesh) {
  Eigen::MatrixXd out(mesh.num_vertices(), 3);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out.row(v) = mesh.vertex_normals[v].transpose();
  return out;
}

TriMesh mesh_from_arrays(const Eigen::MatrixXd& vertices,
                         const Eigen::MatrixXi& faces) {
  if (vertices.cols() != 3 || faces.cols() != 3)
    throw DimensionMismatch("vertices and faces must be (n, 3)");
  TriMesh mesh;
  mesh.vertices.reserve(vertices.rows());
  for (Eigen::Index v = 0; v < vertices.rows(); ++v)
    mesh.vertices.push_back(vertices.row(v).transpose());
  mesh.faces.reserve(faces.rows());
  for (Eigen::Index f = 0; f < faces.rows(); ++f)
    mesh.faces.push_back({faces(f, 0), faces(f, 1), faces(f, 2)});
  return compute_normals(std::move(mesh));
}

Eigen::MatrixXd joints_array(const std::vector<Vec3>& joints) {
  Eigen::MatrixXd out(joints.size(), 3);
  for (size_t j = 0; j < joints.size(); ++j)
    out.row(j) = joints[j].transpose();
  return out;
}

std::vector<Vec3> joints_from_array(const Eigen::MatrixXd& a) {
  if (a.cols() != 3) throw DimensionMismatch("joints must be (n, 3)");
  std::vector<Vec3> out;
  out.reserve(a.rows());
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    out.push_back(a.row(j).transpose());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "grasp refinement against target contact maps";

  py::register_exception<FileFormat>(m, "FileFormatError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatchError",
                                            PyExc_ValueError);
  py::register_exception<NotWatertight>(m, "NotWatertightError",
                                        PyExc_ValueError);

  py::class_<TriMesh>(m, "TriMesh")
      .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("vertices", &vertices_array)
      .def_property_readonly("faces", &faces_array)
      .def_property_readonly("vertex_normals", &normals_array)
      .def_property_readonly("num_vertices", &TriMesh::num_vertices)
      .def_property_readonly("num_faces", &TriMesh::num_faces);

  m.def("load_mesh", &load_mesh, py::arg("path"), py::arg("scale") = 1.0);
  m.def("save_mesh", &save_mesh, py::arg("mesh"), py::arg("path"));
  m.def("is_watertight", &is_watertight);
  m.def("make_box", &make_box, py::arg("center"), py::arg("full_extents"));
  m.def("make_icosphere", &make_icosphere, py::arg("radius"),
        py::arg("subdivisions"), py::arg("center") = Vec3(0.0, 0.0, 0.0));
  m.def("make_cylinder", &make_cylinder, py::arg("radius"), py::arg("height"),
        py::arg("segments"), py::arg("center") = Vec3(0.0, 0.0, 0.0));

  m.def(
      "signed_distance",
      [](const Vec3& q, const TriMesh& mesh) {
        return signed_distance(q, mesh);
      },
      py::arg("query"), py::arg("mesh"));
  m.def("intersection_volume", &intersection_volume, py::arg("a"),
        py::arg("b"), py::arg("cell_size") = 1.0);

  py::class_<HandParams>(m, "HandParams")
      .def(py::init<>())
      .def_readwrite("theta", &HandParams::theta)
      .def_readwrite("beta", &HandParams::beta)
      .def_readwrite("translation", &HandParams::translation)
      .def_readwrite("rotation", &HandParams::rotation)
      .def("dim", &HandParams::dim);

  py::class_<HandModel>(m, "HandModel")
      .def_property_readonly(
          "rest_mesh", [](const HandModel& h) { return h.rest_mesh; })
      .def_property_readonly("num_joints", &HandModel::num_joints)
      .def_property_readonly("num_pose_coeffs", &HandModel::num_pose_coeffs)
      .def("zero_params", &HandModel::zero_params);

  m.def("make_synthetic_hand", &make_synthetic_hand);
  m.def("load_hand_model", &load_hand_model, py::arg("path"));
  m.def("save_hand_model", &save_hand_model, py::arg("model"),
        py::arg("path"));
  m.def("load_hand_params", &load_hand_params, py::arg("path"));
  m.def("save_hand_params", &save_hand_params, py::arg("params"),
        py::arg("path"));

  m.def(
      "pose_hand",
      [](const HandModel& model, const HandParams& params) {
        const PosedHand posed = pose_hand(model, params);
        return py::make_tuple(posed.mesh, joints_array(posed.joints));
      },
      py::arg("model"), py::arg("params"),
      "Returns (posed mesh, joints array).");

  py::class_<CapsuleConfig>(m, "CapsuleConfig")
      .def(py::init<>())
      .def_readwrite("c_top", &CapsuleConfig::c_top)
      .def_readwrite("c_bot", &CapsuleConfig::c_bot)
      .def_readwrite("c_rad", &CapsuleConfig::c_rad);

  m.def(
      "contact_maps",
      [](const TriMesh& object, const TriMesh& hand,
         const CapsuleConfig& cfg) {
        const ContactResult r = contact_maps(object, hand, cfg);
        return py::make_tuple(r.object_map.values, r.hand_map.values);
      },
      py::arg("object"), py::arg("hand"),
      py::arg("capsule") = CapsuleConfig{},
      "Returns (object contact values, hand contact values).");

  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init<>())
      .def_readwrite("lambda_miss", &LossConfig::lambda_miss)
      .def_readwrite("lambda_object", &LossConfig::lambda_object)
      .def_readwrite("lambda_pen", &LossConfig::lambda_pen)
      .def_readwrite("c_pen", &LossConfig::c_pen);

  py::class_<GradScale>(m, "GradScale")
      .def(py::init<>())
      .def_readwrite("theta", &GradScale::theta)
      .def_readwrite("beta", &GradScale::beta)
      .def_readwrite("translation", &GradScale::translation)
      .def_readwrite("rotation", &GradScale::rotation);

  py::class_<OptimConfig>(m, "OptimConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &OptimConfig::learning_rate)
      .def_readwrite("iterations", &OptimConfig::iterations)
      .def_readwrite("grad_scale", &OptimConfig::grad_scale)
      .def_readwrite("n_restart", &OptimConfig::n_restart)
      .def_readwrite("seed", &OptimConfig::seed);

  py::class_<OptimResult>(m, "OptimResult")
      .def_readonly("params", &OptimResult::params)
      .def_readonly("final_loss", &OptimResult::final_loss)
      .def_readonly("loss_trace", &OptimResult::loss_trace)
      .def_readonly("restart_index", &OptimResult::restart_index)
      .def_readonly("restart_final_losses",
                    &OptimResult::restart_final_losses);

  m.def(
      "optimize",
      [](const HandModel& model, const TriMesh& object,
         const HandParams& init, const Eigen::VectorXd& target_object,
         const std::optional<Eigen::VectorXd>& target_hand,
         const LossConfig& loss_cfg, const OptimConfig& optim_cfg,
         const CapsuleConfig& capsule_cfg) {
        Targets targets;
        targets.object = {ContactMap::Side::object, target_object};
        if (target_hand)
          targets.hand = ContactMap{ContactMap::Side::hand, *target_hand};
        return optimize(model, object, init, targets, loss_cfg, optim_cfg,
                        capsule_cfg);
      },
      py::arg("model"), py::arg("object"), py::arg("init"),
      py::arg("target_object"), py::arg("target_hand") = std::nullopt,
      py::arg("loss") = LossConfig{}, py::arg("optim") = OptimConfig{},
      py::arg("capsule") = CapsuleConfig{});

  py::class_<PerturbConfig>(m, "PerturbConfig")
      .def(py::init<>())
      .def_readwrite("sigma_theta", &PerturbConfig::sigma_theta)
      .def_readwrite("sigma_translation", &PerturbConfig::sigma_translation)
      .def_readwrite("sigma_rotation_deg", &PerturbConfig::sigma_rotation_deg)
      .def_readwrite("n_perturbations_per_grasp",
                     &PerturbConfig::n_perturbations_per_grasp)
      .def_readwrite("seed", &PerturbConfig::seed);

  m.def(
      "perturb",
      [](const HandParams& params, const PerturbConfig& cfg,
         std::uint64_t stream) {
        auto rng = make_rng(cfg.seed, stream);
        return perturb(params, cfg, rng);
      },
      py::arg("params"), py::arg("config"), py::arg("stream") = 0);

  py::class_<MetricsConfig>(m, "MetricsConfig")
      .def(py::init<>())
      .def_readwrite("contact_band", &MetricsConfig::contact_band)
      .def_readwrite("contact_threshold", &MetricsConfig::contact_threshold)
      .def_readwrite("voxel_size", &MetricsConfig::voxel_size);

  m.def(
      "mpjpe",
      [](const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt) {
        return mpjpe(joints_from_array(pred), joints_from_array(gt));
      },
      py::arg("pred_joints"), py::arg("gt_joints"));
  m.def("contact_coverage", &contact_coverage, py::arg("hand"),
        py::arg("object"), py::arg("config") = MetricsConfig{});
  m.def(
      "contact_precision_recall",
      [](const TriMesh& hand, const TriMesh& object,
         const Eigen::VectorXd& gt, const MetricsConfig& cfg) {
        const ContactMap map{ContactMap::Side::object, gt};
        return contact_precision_recall(hand, object, map, cfg);
      },
      py::arg("hand"), py::arg("object"), py::arg("gt_contact"),
      py::arg("config") = MetricsConfig{});
}
