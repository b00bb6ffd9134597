#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "contactfit/contact.hpp"
#include "contactfit/hand.hpp"
#include "contactfit/mesh.hpp"

namespace contactfit {

// Contact-loss weights. lambda_miss penalizes target contact the current
// pose fails to reach (missing contact) more heavily than unexpected
// contact. c_pen is the penetration depth tolerated without penalty.
// Defaults tuned on the synthetic round-trip set: the object term carries
// most of the pull (few, concentrated target vertices) and a light
// penetration weight keeps grasps from hovering outside the surface.
struct LossConfig {
  double lambda_miss = 3.0;
  double lambda_object = 3.0;
  double lambda_pen = 1.0;
  double c_pen = 2.0;  // mm
};

struct GradScale {
  double theta = 1.0;
  double beta = 0.0;
  double translation = 1.0;
  double rotation = 1.0;
};

struct OptimConfig {
  double learning_rate = 0.01;
  int iterations = 250;
  GradScale grad_scale;
  int n_restart = 1;
  double restart_translation_sigma = 10.0;  // mm
  double restart_rotation_sigma_deg = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

// Target contact maps the optimizer drives toward. The hand target is
// optional; without it the hand contact term is dropped.
struct Targets {
  ContactMap object;
  std::optional<ContactMap> hand;
};

// Asymmetric per-vertex contact loss, averaged over vertices:
// lambda_miss * |C - target| where C < target, |C - target| otherwise.
double loss_object(const ContactMap& current, const ContactMap& target,
                   const LossConfig& cfg);
// Same formula on the hand map; 0 when no hand target is given.
double loss_hand(const ContactMap& current,
                 const std::optional<ContactMap>& target,
                 const LossConfig& cfg);

// Depth of each hand vertex beyond c_pen inside the object, measured along
// the normal of its phi-nearest object vertex, averaged over hand vertices
// (mm). Hand vertices outside the object contribute nothing.
double loss_penetration(const TriMesh& object, const TriMesh& hand,
                        const ContactCorrespondence& hand_corr,
                        const LossConfig& cfg);

// E = E_hand + lambda_object * E_object + lambda_pen * E_pen
double total_loss(double e_hand, double e_object, double e_pen,
                  const LossConfig& cfg);

struct AdamState {
  Eigen::VectorXd m, v;
  int t = 0;

  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// Standard bias-corrected ADAM step on `params` in place. The gradient is
// multiplied componentwise by `scale` before the moment updates.
void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& gradient, const Eigen::VectorXd& scale,
               const OptimConfig& cfg);

// Loss and its analytic gradient w.r.t. the flat parameter vector, with the
// contact correspondences and hand capsule directions held fixed at
// `params` (recomputed on every optimizer iteration). Exposed for the
// finite-difference checks.
struct LossBreakdown {
  double hand = 0, object = 0, penetration = 0, total = 0;
};
LossBreakdown evaluate_loss(const HandModel& model, const TriMesh& object,
                            const HandParams& params, const Targets& targets,
                            const LossConfig& loss_cfg,
                            const CapsuleConfig& capsule_cfg,
                            const PointIndex& object_index,
                            Eigen::VectorXd* gradient = nullptr);

// The loss as a function of params alone, with the correspondences and hand
// capsule directions pinned to those computed at some reference pose. This
// is the function each optimizer iteration steps on and the one the
// finite-difference oracles difference.
LossBreakdown evaluate_loss_frozen(const HandModel& model,
                                   const TriMesh& object,
                                   const HandParams& params,
                                   const Targets& targets,
                                   const LossConfig& loss_cfg,
                                   const CapsuleConfig& capsule_cfg,
                                   const ContactResult& frozen,
                                   const std::vector<Vec3>& frozen_normals);

struct OptimResult {
  HandParams params;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // winning restart, per iteration
  int restart_index = 0;
  std::vector<double> restart_final_losses;  // one per restart
};

// The full refinement loop: for each restart, perturb the initial pose
// (restart 0 runs unperturbed), run `iterations` ADAM steps recomputing
// correspondences, contact maps, losses and gradients each iteration, and
// keep the restart with the lowest final loss. Deterministic for a fixed
// seed. A restart whose loss turns non-finite is abandoned and recorded as
// infinity.
OptimResult optimize(const HandModel& model, const TriMesh& object,
                     const HandParams& init, const Targets& targets,
                     const LossConfig& loss_cfg, const OptimConfig& optim_cfg,
                     const CapsuleConfig& capsule_cfg = {});

}  // namespace contactfit
