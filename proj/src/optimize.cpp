#include "contactfit/optimize.hpp"

#include <cmath>
#include <limits>

#include "contactfit/errors.hpp"
#include "contactfit/rng.hpp"

namespace contactfit {

namespace {

// The optimizer state stores translation in units of 500 mm so the
// published learning rate acts at a useful step size; geometry stays
// in mm. With ADAM's early steps near the learning rate this gives the
// translation roughly 5 mm per iteration, large enough to close a 50 mm
// offset within the iteration budget and small enough to settle.
constexpr double kTranslationUnit = 500.0;  // mm per optimizer unit

double asymmetric_residual(double current, double target, double lambda) {
  const double e = current - target;
  return (e < 0.0 ? lambda : 1.0) * std::abs(e);
}

}  // namespace

double loss_object(const ContactMap& current, const ContactMap& target,
                   const LossConfig& cfg) {
  if (current.size() != target.size())
    throw DimensionMismatch("contact map / target length mismatch");
  if (current.size() == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < current.size(); ++i)
    sum += asymmetric_residual(current.values[i], target.values[i],
                               cfg.lambda_miss);
  return sum / current.size();
}

double loss_hand(const ContactMap& current,
                 const std::optional<ContactMap>& target,
                 const LossConfig& cfg) {
  if (!target.has_value()) return 0.0;
  return loss_object(current, *target, cfg);
}

double loss_penetration(const TriMesh& object, const TriMesh& hand,
                        const ContactCorrespondence& hand_corr,
                        const LossConfig& cfg) {
  const int nh = hand.num_vertices();
  if (static_cast<int>(hand_corr.nearest.size()) != nh)
    throw StaleCorrespondence("correspondence does not match the hand");
  if (nh == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < nh; ++i) {
    const int j = hand_corr.nearest[i];
    if (j < 0 || j >= object.num_vertices())
      throw StaleCorrespondence("correspondence does not match the object");
    const double depth = (object.vertices[j] - hand.vertices[i])
                             .dot(object.vertex_normals[j]) -
                         cfg.c_pen;
    if (depth > 0.0) sum += depth;
  }
  return sum / nh;
}

double total_loss(double e_hand, double e_object, double e_pen,
                  const LossConfig& cfg) {
  return e_hand + cfg.lambda_object * e_object + cfg.lambda_pen * e_pen;
}

void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& gradient, const Eigen::VectorXd& scale,
               const OptimConfig& cfg) {
  if (params.size() != gradient.size() || params.size() != scale.size() ||
      params.size() != state.m.size())
    throw DimensionMismatch("adam state / gradient size mismatch");
  state.t += 1;
  const Eigen::VectorXd g = scale.cwiseProduct(gradient);
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * g;
  state.v = cfg.adam_beta2 * state.v +
            (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, state.t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, state.t);
  const Eigen::VectorXd mhat = state.m / c1;
  const Eigen::VectorXd vhat = state.v / c2;
  params -= cfg.learning_rate *
            (mhat.array() / (vhat.array().sqrt() + cfg.adam_eps)).matrix();
}

LossBreakdown evaluate_loss(const HandModel& model, const TriMesh& object,
                            const HandParams& params, const Targets& targets,
                            const LossConfig& loss_cfg,
                            const CapsuleConfig& capsule_cfg,
                            const PointIndex& object_index,
                            Eigen::VectorXd* gradient) {
  const PosedHand posed = pose_hand(model, params);
  const PointIndex hand_index(posed.mesh.vertices);
  const ContactResult result =
      contact_maps(object, posed.mesh, capsule_cfg, object_index, hand_index);

  LossBreakdown out;
  out.object = loss_object(result.object_map, targets.object, loss_cfg);
  out.hand = loss_hand(result.hand_map, targets.hand, loss_cfg);
  out.penetration =
      loss_penetration(object, posed.mesh, result.hand_corr, loss_cfg);
  out.total = total_loss(out.hand, out.object, out.penetration, loss_cfg);
  if (!gradient) return out;

  const int no = object.num_vertices();
  const int nh = posed.mesh.num_vertices();
  std::vector<Vec3> vertex_grad(nh, Vec3::Zero());

  // object contact term
  for (int i = 0; i < no; ++i) {
    const double e = result.object_map.values[i] - targets.object.values[i];
    if (e == 0.0) continue;
    const double de = (e < 0.0 ? -loss_cfg.lambda_miss : 1.0) / no *
                      loss_cfg.lambda_object;
    const Vec3 g = contact_grad_wrt_hand_vertex(
        object, posed.mesh, result, capsule_cfg, ContactMap::Side::object, i);
    vertex_grad[result.object_corr.nearest[i]] += de * g;
  }
  // hand contact term
  if (targets.hand.has_value()) {
    if (targets.hand->size() != nh)
      throw DimensionMismatch("hand target / hand mesh length mismatch");
    for (int i = 0; i < nh; ++i) {
      const double e = result.hand_map.values[i] - targets.hand->values[i];
      if (e == 0.0) continue;
      const double de = (e < 0.0 ? -loss_cfg.lambda_miss : 1.0) / nh;
      const Vec3 g = contact_grad_wrt_hand_vertex(
          object, posed.mesh, result, capsule_cfg, ContactMap::Side::hand, i);
      vertex_grad[i] += de * g;
    }
  }
  // penetration term
  for (int i = 0; i < nh; ++i) {
    const int j = result.hand_corr.nearest[i];
    const double depth = (object.vertices[j] - posed.mesh.vertices[i])
                             .dot(object.vertex_normals[j]) -
                         loss_cfg.c_pen;
    if (depth > 0.0)
      vertex_grad[i] -=
          loss_cfg.lambda_pen / nh * object.vertex_normals[j];
  }

  std::vector<int> all(nh);
  for (int v = 0; v < nh; ++v) all[v] = v;
  const Eigen::MatrixXd jac = pose_jacobian(model, params, all);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(jac.cols());
  for (int v = 0; v < nh; ++v) {
    if (vertex_grad[v].isZero()) continue;
    g += jac.middleRows<3>(3 * v).transpose() * vertex_grad[v];
  }
  *gradient = g;
  return out;
}

LossBreakdown evaluate_loss_frozen(const HandModel& model,
                                   const TriMesh& object,
                                   const HandParams& params,
                                   const Targets& targets,
                                   const LossConfig& loss_cfg,
                                   const CapsuleConfig& capsule_cfg,
                                   const ContactResult& frozen,
                                   const std::vector<Vec3>& frozen_normals) {
  const PosedHand posed = pose_hand(model, params);
  const int no = object.num_vertices();
  const int nh = posed.mesh.num_vertices();
  if (frozen.object_map.size() != no || frozen.hand_map.size() != nh ||
      static_cast<int>(frozen_normals.size()) != nh)
    throw StaleCorrespondence("frozen correspondence size mismatch");

  ContactMap object_map{ContactMap::Side::object, Eigen::VectorXd(no)};
  for (int i = 0; i < no; ++i) {
    const int j = frozen.object_corr.nearest[i];
    const double phi =
        capsule_distance(posed.mesh.vertices[j], object.vertices[i],
                         object.vertex_normals[i], capsule_cfg);
    object_map.values[i] = contact_value(phi, capsule_cfg);
  }
  ContactMap hand_map{ContactMap::Side::hand, Eigen::VectorXd(nh)};
  for (int i = 0; i < nh; ++i) {
    const int o = frozen.hand_corr.nearest[i];
    const double phi =
        capsule_distance(object.vertices[o], posed.mesh.vertices[i],
                         frozen_normals[i], capsule_cfg);
    hand_map.values[i] = contact_value(phi, capsule_cfg);
  }

  LossBreakdown out;
  out.object = loss_object(object_map, targets.object, loss_cfg);
  out.hand = loss_hand(hand_map, targets.hand, loss_cfg);
  out.penetration =
      loss_penetration(object, posed.mesh, frozen.hand_corr, loss_cfg);
  out.total = total_loss(out.hand, out.object, out.penetration, loss_cfg);
  return out;
}

namespace {

Eigen::VectorXd encode(const HandParams& p) {
  Eigen::VectorXd x = p.to_vector();
  x.segment(p.theta.size() + p.beta.size(), 3) /= kTranslationUnit;
  return x;
}

HandParams decode(const Eigen::VectorXd& x, int n_theta, int n_beta) {
  Eigen::VectorXd y = x;
  y.segment(n_theta + n_beta, 3) *= kTranslationUnit;
  return HandParams::from_vector(y, n_theta, n_beta);
}

}  // namespace

OptimResult optimize(const HandModel& model, const TriMesh& object,
                     const HandParams& init, const Targets& targets,
                     const LossConfig& loss_cfg, const OptimConfig& optim_cfg,
                     const CapsuleConfig& capsule_cfg) {
  const int n_theta = static_cast<int>(init.theta.size());
  const int n_beta = static_cast<int>(init.beta.size());
  const int dim = init.dim();
  const PointIndex object_index(object.vertices);

  Eigen::VectorXd scale(dim);
  scale.head(n_theta).setConstant(optim_cfg.grad_scale.theta);
  scale.segment(n_theta, n_beta).setConstant(optim_cfg.grad_scale.beta);
  scale.segment(n_theta + n_beta, 3)
      .setConstant(optim_cfg.grad_scale.translation);
  scale.tail(3).setConstant(optim_cfg.grad_scale.rotation);

  OptimResult best;
  best.final_loss = std::numeric_limits<double>::infinity();
  best.restart_index = -1;
  best.params = init;

  for (int r = 0; r < optim_cfg.n_restart; ++r) {
    HandParams start = init;
    if (r > 0) {
      auto rng = make_rng(optim_cfg.seed, static_cast<std::uint64_t>(r));
      std::normal_distribution<double> tnoise(
          0.0, optim_cfg.restart_translation_sigma);
      for (int k = 0; k < 3; ++k) start.translation[k] += tnoise(rng);
      std::normal_distribution<double> unit(0.0, 1.0);
      Vec3 axis(unit(rng), unit(rng), unit(rng));
      if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
      axis.normalize();
      std::normal_distribution<double> anoise(
          0.0, optim_cfg.restart_rotation_sigma_deg * M_PI / 180.0);
      const Eigen::Matrix3d noise = axis_angle_to_matrix(axis * anoise(rng));
      start.rotation = matrix_to_axis_angle(
          noise * axis_angle_to_matrix(start.rotation));
    }

    Eigen::VectorXd x = encode(start);
    AdamState state(dim);
    std::vector<double> trace;
    trace.reserve(optim_cfg.iterations);
    bool aborted = false;
    for (int it = 0; it < optim_cfg.iterations; ++it) {
      const HandParams p = decode(x, n_theta, n_beta);
      Eigen::VectorXd grad;
      const LossBreakdown loss = evaluate_loss(
          model, object, p, targets, loss_cfg, capsule_cfg, object_index,
          &grad);
      trace.push_back(loss.total);
      if (!std::isfinite(loss.total) || !grad.allFinite()) {
        aborted = true;
        break;
      }
      grad.segment(n_theta + n_beta, 3) *= kTranslationUnit;  // chain rule
      adam_step(state, x, grad, scale, optim_cfg);
    }

    double final_loss = std::numeric_limits<double>::infinity();
    HandParams final_params = decode(x, n_theta, n_beta);
    if (!aborted) {
      const LossBreakdown loss =
          evaluate_loss(model, object, final_params, targets, loss_cfg,
                        capsule_cfg, object_index);
      if (std::isfinite(loss.total)) final_loss = loss.total;
    }
    best.restart_final_losses.push_back(final_loss);
    if (final_loss < best.final_loss || best.restart_index < 0) {
      best.final_loss = final_loss;
      best.params = aborted ? start : final_params;
      best.loss_trace = std::move(trace);
      best.restart_index = r;
    }
  }
  best.params.rotation = canonicalize_rotation(best.params.rotation);
  return best;
}

}  // namespace contactfit
