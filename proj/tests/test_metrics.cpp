#include <Eigen/Geometry>

#include <filesystem>
#include <fstream>
#include <random>

#include "contactfit/errors.hpp"
#include "contactfit/metrics.hpp"
#include "contactfit/sdf.hpp"
#include "doctest.h"

using namespace contactfit;

TEST_CASE("mpjpe point cases") {
  const std::vector<Vec3> a = {{0, 0, 0}, {1, 2, 3}};
  CHECK(mpjpe(a, a) == 0.0);
  const std::vector<Vec3> b = {{3, 4, 0}};
  CHECK(mpjpe(b, {{0, 0, 0}}) == doctest::Approx(5.0));
  // mean over joints
  CHECK(mpjpe({{1, 0, 0}, {0, 3, 0}}, {{0, 0, 0}, {0, 0, 0}}) ==
        doctest::Approx(2.0));
  CHECK_THROWS_AS(mpjpe(a, b), DimensionMismatch);
  CHECK_THROWS_AS(mpjpe({}, {}), DimensionMismatch);
}

TEST_CASE("coverage is 0 far away and 100 when embedded in the band") {
  const MetricsConfig cfg;  // band 2 mm
  const TriMesh object = make_box({0, 0, 0}, {20, 20, 20});
  const TriMesh far = make_box({100, 0, 0}, {10, 10, 10});
  CHECK(contact_coverage(far, object, cfg) == 0.0);
  // a small box just inside the object's wall: every vertex within the band
  const TriMesh hugging = make_box({9.5, 0, 0}, {1, 4, 4});
  CHECK(contact_coverage(hugging, object, cfg) == 100.0);
}

TEST_CASE("coverage counts the fraction of vertices inside the band") {
  const MetricsConfig cfg;
  const TriMesh object = make_box({0, 0, 0}, {20, 20, 20});
  // 8 of the box's corners at x = -9: within 1 mm of the wall at x = -10;
  // the other 8 at x = 40: far outside
  const TriMesh half_in = make_box({15.5, 0, 0}, {49, 4, 4});
  CHECK(contact_coverage(half_in, object, cfg) == doctest::Approx(50.0));
}

TEST_CASE("precision and recall on a perfect prediction") {
  const MetricsConfig cfg;
  const TriMesh object = make_box({0, 0, 0}, {20, 20, 20});
  // hand wrapping one wall: the 4 object corners at x = +10 are contacted
  const TriMesh hand = make_box({11, 0, 0}, {2, 24, 24});
  ContactMap gt;
  gt.side = ContactMap::Side::object;
  gt.values = Eigen::VectorXd::Zero(object.num_vertices());
  for (int v = 0; v < object.num_vertices(); ++v)
    if (object.vertices[v].x() > 0) gt.values[v] = 1.0;
  const auto [precision, recall] =
      contact_precision_recall(hand, object, gt, cfg);
  CHECK(precision == doctest::Approx(100.0));
  CHECK(recall == doctest::Approx(100.0));
}

TEST_CASE("predicting everything halves precision when half is true") {
  const MetricsConfig cfg;
  const TriMesh object = make_box({0, 0, 0}, {20, 20, 20});
  // hand engulfing the object with every object vertex 1.5 mm from its
  // inner surface: everything is predicted in contact
  const TriMesh hand = make_box({0, 0, 0}, {23, 23, 23});
  ContactMap gt;
  gt.side = ContactMap::Side::object;
  gt.values = Eigen::VectorXd::Zero(object.num_vertices());
  for (int v = 0; v < object.num_vertices() / 2; ++v) gt.values[v] = 1.0;
  const auto [precision, recall] = contact_precision_recall(hand, object, gt, cfg);
  CHECK(precision == doctest::Approx(50.0));
  CHECK(recall == doctest::Approx(100.0));
}

TEST_CASE("degenerate precision and recall default to 100") {
  const MetricsConfig cfg;
  const TriMesh object = make_box({0, 0, 0}, {20, 20, 20});
  const TriMesh far = make_box({200, 0, 0}, {10, 10, 10});
  ContactMap empty_gt;
  empty_gt.side = ContactMap::Side::object;
  empty_gt.values = Eigen::VectorXd::Zero(object.num_vertices());
  const auto [precision, recall] =
      contact_precision_recall(far, object, empty_gt, cfg);
  CHECK(precision == 100.0);  // no predictions
  CHECK(recall == 100.0);     // no ground-truth positives
}

TEST_CASE("precision and recall match a brute-force confusion matrix") {
  const MetricsConfig cfg;
  const TriMesh object = make_icosphere(20.0, 2);
  const TriMesh hand = make_box({18, 0, 0}, {14, 20, 20});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ContactMap gt;
  gt.side = ContactMap::Side::object;
  gt.values.resize(object.num_vertices());
  for (int v = 0; v < object.num_vertices(); ++v) gt.values[v] = u(rng);

  const MeshDistanceField hand_field(hand);
  int tp = 0, fp = 0, fn = 0;
  for (int v = 0; v < object.num_vertices(); ++v) {
    const bool pred =
        hand_field.unsigned_distance(object.vertices[v]) <= cfg.contact_band;
    const bool truth = gt.values[v] >= cfg.contact_threshold;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  REQUIRE(tp + fp > 0);
  REQUIRE(tp + fn > 0);
  const auto [precision, recall] =
      contact_precision_recall(hand, object, gt, cfg);
  CHECK(precision == doctest::Approx(100.0 * tp / (tp + fp)));
  CHECK(recall == doctest::Approx(100.0 * tp / (tp + fn)));
}

TEST_CASE("metrics are invariant under a rigid transform of the scene") {
  const HandModel model = make_synthetic_hand();
  const auto grasps = synth_grasps(model, 1, 2);
  const Grasp& grasp = grasps[0];
  const PosedHand posed = pose_hand(model, grasp.params);
  const ContactResult maps = contact_maps(grasp.object, posed.mesh);
  const MetricsConfig cfg;
  const SampleMetrics base = evaluate_grasp(
      model, grasp.object, grasp.params, grasp.params, maps.object_map, cfg);
  CHECK(base.mpjpe_mm == 0.0);

  // rotate and shift everything together
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.6, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const Vec3 shift(30, -10, 20);
  const TriMesh moved_object = transformed(grasp.object, rot, shift);
  HandParams moved = grasp.params;
  moved.rotation = matrix_to_axis_angle(
      rot * axis_angle_to_matrix(grasp.params.rotation));
  moved.translation = rot * grasp.params.translation + shift;
  const SampleMetrics after =
      evaluate_grasp(model, moved_object, moved, moved, maps.object_map, cfg);
  CHECK(after.coverage_pct == doctest::Approx(base.coverage_pct).epsilon(0.02));
  CHECK(after.recall_pct == doctest::Approx(base.recall_pct).epsilon(0.02));
  CHECK(after.precision_pct ==
        doctest::Approx(base.precision_pct).epsilon(0.02));
  CHECK(after.intersection_volume_cm3 ==
        doctest::Approx(base.intersection_volume_cm3).epsilon(0.15));
}

TEST_CASE("aggregate mean and population standard deviation") {
  SampleMetrics a;
  a.mpjpe_mm = 10;
  a.coverage_pct = 30;
  SampleMetrics b;
  b.mpjpe_mm = 20;
  b.coverage_pct = 50;
  const MetricsReport two = aggregate({a, b});
  CHECK(two.n == 2);
  CHECK(two.mpjpe_mm.mean == doctest::Approx(15.0));
  CHECK(two.mpjpe_mm.stddev == doctest::Approx(5.0));
  CHECK(two.coverage_pct.mean == doctest::Approx(40.0));

  const MetricsReport one = aggregate({a});
  CHECK(one.n == 1);
  CHECK(one.mpjpe_mm.mean == doctest::Approx(10.0));
  CHECK(one.mpjpe_mm.stddev == 0.0);

  const MetricsReport ten = aggregate(std::vector<SampleMetrics>(10, a));
  CHECK(ten.mpjpe_mm.mean == doctest::Approx(10.0));
  CHECK(ten.mpjpe_mm.stddev == doctest::Approx(0.0));
}

TEST_CASE("batch evaluation aligns results with samples") {
  const HandModel model = make_synthetic_hand();
  const auto grasps = synth_grasps(model, 2, 14);
  PerturbConfig pcfg;
  pcfg.n_perturbations_per_grasp = 2;
  pcfg.seed = 3;
  const auto samples = make_dataset(grasps, model, pcfg);
  std::vector<HandParams> perturbed;
  for (const GraspSample& s : samples) perturbed.push_back(s.perturbed_params);

  const MetricsConfig cfg;
  std::vector<SampleMetrics> per_sample;
  const MetricsReport report =
      evaluate_batch(model, grasps, samples, perturbed, cfg, &per_sample);
  CHECK(report.n == static_cast<int>(samples.size()));
  CHECK(per_sample.size() == samples.size());
  CHECK(report.mpjpe_mm.mean > 0.0);

  // scoring the true poses instead drives the pose error to zero
  std::vector<HandParams> truth;
  for (const GraspSample& s : samples) truth.push_back(s.true_params);
  const MetricsReport perfect =
      evaluate_batch(model, grasps, samples, truth, cfg);
  CHECK(perfect.mpjpe_mm.mean == doctest::Approx(0.0));

  truth.pop_back();
  CHECK_THROWS_AS(evaluate_batch(model, grasps, samples, truth, cfg),
                  DimensionMismatch);
}

TEST_CASE("report files are written with both phases") {
  SampleMetrics s;
  s.mpjpe_mm = 12.5;
  s.recall_pct = 60;
  const MetricsReport after = aggregate({s});
  s.mpjpe_mm = 80;
  s.recall_pct = 20;
  const MetricsReport before = aggregate({s});

  const auto dir = std::filesystem::temp_directory_path();
  const std::string json_path = (dir / "report.json").string();
  save_report_json(after, before, json_path);
  std::ifstream in(json_path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  CHECK(text.find("\"before\"") != std::string::npos);
  CHECK(text.find("\"after\"") != std::string::npos);
  std::filesystem::remove(json_path);

  const std::string md = report_markdown(after, before);
  CHECK(md.find("MPJPE") != std::string::npos);
  CHECK(md.find("recall") != std::string::npos);

  const std::string csv_path = (dir / "metrics.csv").string();
  save_metrics_csv({s, s}, csv_path);
  std::ifstream csv(csv_path);
  std::string line;
  int lines = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);  // header + 2 rows
  std::filesystem::remove(csv_path);
}
