#include <random>

#include "contactfit/errors.hpp"
#include "contactfit/optimize.hpp"
#include "doctest.h"

using namespace contactfit;

namespace {

ContactMap map_of(ContactMap::Side side, std::initializer_list<double> v) {
  ContactMap m;
  m.side = side;
  m.values.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) m.values[i++] = x;
  return m;
}

// Single object vertex with +z normal and a single hand vertex at the given
// depth along -n; enough structure for loss_penetration.
struct PenetrationCase {
  TriMesh object, hand;
  ContactCorrespondence corr;

  explicit PenetrationCase(double depth) {
    object.vertices = {{0, 0, 0}};
    object.vertex_normals = {{0, 0, 1}};
    hand.vertices = {{0, 0, -depth}};
    hand.vertex_normals = {{0, 0, 1}};
    corr.nearest = {0};
    corr.phi = Eigen::VectorXd::Constant(1, std::abs(depth));
  }
};

}  // namespace

TEST_CASE("object loss point cases") {
  const LossConfig cfg;  // lambda_miss = 3
  const ContactMap target = map_of(ContactMap::Side::object, {0.8});
  CHECK(loss_object(target, target, cfg) == 0.0);
  CHECK(loss_object(map_of(ContactMap::Side::object, {0.2}), target, cfg) ==
        doctest::Approx(1.8));  // missing contact branch
  CHECK(loss_object(map_of(ContactMap::Side::object, {0.8}),
                    map_of(ContactMap::Side::object, {0.2}),
                    cfg) == doctest::Approx(0.6));
}

TEST_CASE("under-contact costs exactly lambda times over-contact") {
  const LossConfig cfg;
  for (const double r : {0.05, 0.1, 0.3}) {
    const ContactMap mid = map_of(ContactMap::Side::object, {0.5});
    const double under = loss_object(
        map_of(ContactMap::Side::object, {0.5 - r}), mid, cfg);
    const double over = loss_object(
        map_of(ContactMap::Side::object, {0.5 + r}), mid, cfg);
    CHECK(under == doctest::Approx(3.0 * over));
  }
}

TEST_CASE("object loss averages over vertices") {
  const LossConfig cfg;
  const ContactMap c = map_of(ContactMap::Side::object, {0.0, 0.0, 0.0, 0.0});
  const ContactMap t = map_of(ContactMap::Side::object, {1.0, 0.0, 0.0, 0.0});
  CHECK(loss_object(c, t, cfg) == doctest::Approx(3.0 / 4.0));
  CHECK_THROWS_AS(
      loss_object(c, map_of(ContactMap::Side::object, {1.0}), cfg),
      DimensionMismatch);
}

TEST_CASE("hand loss mirrors object loss and vanishes without a target") {
  const LossConfig cfg;
  const ContactMap c = map_of(ContactMap::Side::hand, {0.1, 0.9, 0.4});
  const ContactMap t = map_of(ContactMap::Side::hand, {0.6, 0.2, 0.4});
  CHECK(loss_hand(c, std::nullopt, cfg) == 0.0);
  CHECK(loss_hand(c, t, cfg) == doctest::Approx(loss_object(c, t, cfg)));
}

TEST_CASE("penetration loss point cases") {
  const LossConfig cfg;  // c_pen = 2
  CHECK(loss_penetration(PenetrationCase(-5.0).object,
                         PenetrationCase(-5.0).hand,
                         PenetrationCase(-5.0).corr, cfg) == 0.0);  // outside
  const PenetrationCase shallow(1.5);
  CHECK(loss_penetration(shallow.object, shallow.hand, shallow.corr, cfg) ==
        0.0);  // within tolerance
  const PenetrationCase deep(5.0);
  CHECK(loss_penetration(deep.object, deep.hand, deep.corr, cfg) ==
        doctest::Approx(3.0));
}

TEST_CASE("penetration loss rejects stale correspondences") {
  const LossConfig cfg;
  PenetrationCase c(5.0);
  c.corr.nearest = {0, 1};
  c.corr.phi = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(loss_penetration(c.object, c.hand, c.corr, cfg),
                  StaleCorrespondence);
}

TEST_CASE("total loss is the weighted sum") {
  LossConfig cfg;
  cfg.lambda_object = 1.0;
  cfg.lambda_pen = 1.0;
  CHECK(total_loss(0, 0, 0, cfg) == 0.0);
  CHECK(total_loss(1, 2, 3, cfg) == doctest::Approx(6.0));
  cfg.lambda_pen = 3.0;
  CHECK(total_loss(1, 2, 3, cfg) == doctest::Approx(12.0));
}

TEST_CASE("adam does nothing on zero gradients") {
  OptimConfig cfg;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 2.5);
  const Eigen::VectorXd x0 = x;
  AdamState state(4);
  for (int i = 0; i < 10; ++i)
    adam_step(state, x, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4),
              cfg);
  CHECK(x.isApprox(x0));
}

TEST_CASE("first adam step has magnitude close to the learning rate") {
  OptimConfig cfg;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  AdamState state(3);
  Eigen::VectorXd g(3);
  g << 7.0, -0.01, 1e4;
  adam_step(state, x, g, Eigen::VectorXd::Ones(3), cfg);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(x[i]) ==
          doctest::Approx(cfg.learning_rate).epsilon(1e-4));
}

TEST_CASE("adam minimizes a quadratic bowl") {
  OptimConfig cfg;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  AdamState state(1);
  for (int i = 0; i < 2000; ++i)
    adam_step(state, x, 2.0 * x, Eigen::VectorXd::Ones(1), cfg);
  CHECK(std::abs(x[0]) < 1e-3);
}

TEST_CASE("gradient pre-scaling freezes components with zero scale") {
  OptimConfig cfg;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  AdamState state(2);
  Eigen::VectorXd scale(2);
  scale << 1.0, 0.0;
  adam_step(state, x, Eigen::VectorXd::Ones(2), scale, cfg);
  CHECK(x[0] != 0.0);
  CHECK(x[1] == 0.0);
}

namespace {

struct GradCheckSetup {
  HandModel model = make_synthetic_hand();
  TriMesh object = make_icosphere(25.0, 2, {-15.0, 0.0, -38.0});
  LossConfig loss_cfg;
  CapsuleConfig capsule_cfg;

  Targets targets_from(const HandParams& reference) const {
    const PosedHand posed = pose_hand(model, reference);
    const ContactResult maps = contact_maps(object, posed.mesh, capsule_cfg);
    return Targets{maps.object_map, maps.hand_map};
  }
};

// Margin check keeping finite differences away from the loss kinks: the
// contact saturation boundary, the penetration clamp, and the asymmetric
// branch switch.
bool non_degenerate(const GradCheckSetup& s, const HandParams& params,
                    const Targets& targets, const ContactResult& frozen) {
  const double margin = 1e-3;
  const PosedHand posed = pose_hand(s.model, params);
  for (int i = 0; i < frozen.object_map.size(); ++i) {
    if (std::abs(frozen.object_corr.phi[i] - s.capsule_cfg.c_rad) < margin)
      return false;
    const double e = frozen.object_map.values[i] - targets.object.values[i];
    if (e != 0.0 && std::abs(e) < margin * 1e-2) return false;
  }
  for (int i = 0; i < frozen.hand_map.size(); ++i) {
    if (std::abs(frozen.hand_corr.phi[i] - s.capsule_cfg.c_rad) < margin)
      return false;
    const double e = frozen.hand_map.values[i] - targets.hand->values[i];
    if (e != 0.0 && std::abs(e) < margin * 1e-2) return false;
    const int j = frozen.hand_corr.nearest[i];
    const double depth = (s.object.vertices[j] - posed.mesh.vertices[i])
                             .dot(s.object.vertex_normals[j]) -
                         s.loss_cfg.c_pen;
    if (std::abs(depth) < margin) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("analytic loss gradient matches finite differences") {
  GradCheckSetup s;
  const PointIndex object_index(s.object.vertices);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);

  int checked = 0;
  for (int attempt = 0; attempt < 60 && checked < 5; ++attempt) {
    HandParams ref = s.model.zero_params();
    ref.theta[0] = 0.8 + 0.2 * n(rng);
    ref.theta[1] = 0.8 + 0.2 * n(rng);
    ref.theta[2] = 0.6 + 0.2 * n(rng);
    const Targets targets = s.targets_from(ref);

    HandParams params = ref;
    for (Eigen::Index k = 0; k < params.theta.size(); ++k)
      params.theta[k] += 0.1 * n(rng);
    params.translation += Vec3(n(rng), n(rng), n(rng)) * 3.0;
    params.rotation += Vec3(n(rng), n(rng), n(rng)) * 0.05;

    const PosedHand posed = pose_hand(s.model, params);
    const ContactResult frozen =
        contact_maps(s.object, posed.mesh, s.capsule_cfg);
    if (!non_degenerate(s, params, targets, frozen)) continue;
    ++checked;

    Eigen::VectorXd grad;
    evaluate_loss(s.model, s.object, params, targets, s.loss_cfg,
                  s.capsule_cfg, object_index, &grad);

    const Eigen::VectorXd x0 = params.to_vector();
    const int nt = static_cast<int>(params.theta.size());
    Eigen::VectorXd fd(x0.size());
    for (int k = 0; k < x0.size(); ++k) {
      const double h = 1e-5;
      Eigen::VectorXd xp = x0, xm = x0;
      xp[k] += h;
      xm[k] -= h;
      const double lp =
          evaluate_loss_frozen(s.model, s.object,
                               HandParams::from_vector(xp, nt, 0), targets,
                               s.loss_cfg, s.capsule_cfg, frozen,
                               posed.mesh.vertex_normals)
              .total;
      const double lm =
          evaluate_loss_frozen(s.model, s.object,
                               HandParams::from_vector(xm, nt, 0), targets,
                               s.loss_cfg, s.capsule_cfg, frozen,
                               posed.mesh.vertex_normals)
              .total;
      fd[k] = (lp - lm) / (2 * h);
    }
    CHECK((fd - grad).norm() / std::max(1e-9, grad.norm()) < 1e-3);
  }
  CHECK(checked == 5);
}

TEST_CASE("consistent targets are a fixed point") {
  GradCheckSetup s;
  HandParams init = s.model.zero_params();
  init.theta[0] = 0.4;  // close but not touching
  const Targets targets = s.targets_from(init);

  OptimConfig cfg;
  cfg.iterations = 40;
  const OptimResult result =
      optimize(s.model, s.object, init, targets, s.loss_cfg, cfg);
  CHECK(result.final_loss <= result.loss_trace.front() + 1e-12);
  const double moved =
      std::sqrt((result.params.to_vector() - init.to_vector()).squaredNorm() /
                init.dim());
  CHECK(moved < 1.0);

  // smoothed trace (window 25) is non-increasing here
  const auto& trace = result.loss_trace;
  auto window_mean = [&](size_t start) {
    double sum = 0;
    for (size_t i = start; i < start + 25; ++i) sum += trace[i];
    return sum / 25.0;
  };
  for (size_t i = 0; i + 26 < trace.size(); ++i)
    CHECK(window_mean(i + 1) <= window_mean(i) + 1e-12);
}

TEST_CASE("optimization is deterministic for a fixed seed") {
  GradCheckSetup s;
  HandParams ref = s.model.zero_params();
  ref.theta[0] = 0.9;
  ref.theta[1] = 0.9;
  const Targets targets = s.targets_from(ref);
  HandParams init = ref;
  init.translation += Vec3(6, -3, 4);

  OptimConfig cfg;
  cfg.iterations = 30;
  cfg.n_restart = 3;
  cfg.seed = 99;
  const OptimResult a =
      optimize(s.model, s.object, init, targets, s.loss_cfg, cfg);
  const OptimResult b =
      optimize(s.model, s.object, init, targets, s.loss_cfg, cfg);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (size_t i = 0; i < a.loss_trace.size(); ++i)
    CHECK(a.loss_trace[i] == b.loss_trace[i]);
  CHECK((a.params.to_vector() - b.params.to_vector()).norm() == 0.0);
  CHECK(a.restart_index == b.restart_index);
}

TEST_CASE("more restarts never hurt with nested seeds") {
  GradCheckSetup s;
  HandParams ref = s.model.zero_params();
  ref.theta[0] = 0.9;
  ref.theta[2] = 0.7;
  const Targets targets = s.targets_from(ref);
  HandParams init = ref;
  init.translation += Vec3(-8, 5, 2);

  OptimConfig cfg;
  cfg.iterations = 25;
  cfg.seed = 7;
  cfg.n_restart = 4;
  const OptimResult multi =
      optimize(s.model, s.object, init, targets, s.loss_cfg, cfg);
  cfg.n_restart = 1;
  const OptimResult single =
      optimize(s.model, s.object, init, targets, s.loss_cfg, cfg);
  CHECK(multi.restart_final_losses[0] ==
        doctest::Approx(single.final_loss));  // restart 0 identical
  CHECK(multi.final_loss <= single.final_loss + 1e-12);
  CHECK(multi.final_loss ==
        *std::min_element(multi.restart_final_losses.begin(),
                          multi.restart_final_losses.end()));
}
