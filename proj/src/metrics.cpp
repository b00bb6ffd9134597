#include "contactfit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "contactfit/errors.hpp"
#include "contactfit/sdf.hpp"
#include "json.hpp"

namespace contactfit {

using json = nlohmann::json;

double mpjpe(const std::vector<Vec3>& pred_joints,
             const std::vector<Vec3>& gt_joints) {
  if (pred_joints.size() != gt_joints.size())
    throw DimensionMismatch("joint counts differ");
  if (pred_joints.empty()) throw DimensionMismatch("no joints");
  double sum = 0;
  for (size_t j = 0; j < pred_joints.size(); ++j)
    sum += (pred_joints[j] - gt_joints[j]).norm();
  return sum / pred_joints.size();
}

double contact_coverage(const TriMesh& hand, const TriMesh& object,
                        const MetricsConfig& cfg) {
  if (hand.vertices.empty()) throw EmptyMesh("hand mesh is empty");
  const MeshDistanceField field(object);
  int in_band = 0;
  for (const Vec3& v : hand.vertices) {
    const double sd = field.signed_distance(v);
    if (sd >= -cfg.contact_band && sd <= cfg.contact_band) ++in_band;
  }
  return 100.0 * in_band / hand.num_vertices();
}

std::pair<double, double> contact_precision_recall(const TriMesh& hand,
                                                   const TriMesh& object,
                                                   const ContactMap& gt_contact,
                                                   const MetricsConfig& cfg) {
  if (gt_contact.size() != object.num_vertices())
    throw DimensionMismatch("ground-truth map does not match the object");
  const MeshDistanceField field(hand);
  int tp = 0, fp = 0, fn = 0;
  for (int v = 0; v < object.num_vertices(); ++v) {
    const bool pred =
        field.unsigned_distance(object.vertices[v]) <= cfg.contact_band;
    const bool gt = gt_contact.values[v] >= cfg.contact_threshold;
    if (pred && gt)
      ++tp;
    else if (pred)
      ++fp;
    else if (gt)
      ++fn;
  }
  const double precision = tp + fp == 0 ? 100.0 : 100.0 * tp / (tp + fp);
  const double recall = tp + fn == 0 ? 100.0 : 100.0 * tp / (tp + fn);
  return {precision, recall};
}

SampleMetrics evaluate_grasp(const HandModel& model, const TriMesh& object,
                             const HandParams& params,
                             const HandParams& gt_params,
                             const ContactMap& gt_object_contact,
                             const MetricsConfig& cfg) {
  const PosedHand posed = pose_hand(model, params);
  const PosedHand gt_posed = pose_hand(model, gt_params);
  SampleMetrics m;
  m.intersection_volume_cm3 =
      intersection_volume(posed.mesh, object, cfg.voxel_size);
  m.mpjpe_mm = mpjpe(posed.joints, gt_posed.joints);
  m.coverage_pct = contact_coverage(posed.mesh, object, cfg);
  std::tie(m.precision_pct, m.recall_pct) =
      contact_precision_recall(posed.mesh, object, gt_object_contact, cfg);
  return m;
}

namespace {

Aggregate aggregate_field(const std::vector<SampleMetrics>& per_sample,
                          double SampleMetrics::*field) {
  Aggregate a;
  const double n = static_cast<double>(per_sample.size());
  for (const SampleMetrics& s : per_sample) a.mean += s.*field;
  a.mean /= n;
  double var = 0;
  for (const SampleMetrics& s : per_sample) {
    const double d = s.*field - a.mean;
    var += d * d;
  }
  a.stddev = std::sqrt(var / n);
  return a;
}

}  // namespace

MetricsReport aggregate(const std::vector<SampleMetrics>& per_sample) {
  if (per_sample.empty()) throw DimensionMismatch("no samples to aggregate");
  MetricsReport r;
  r.n = static_cast<int>(per_sample.size());
  r.intersection_volume_cm3 =
      aggregate_field(per_sample, &SampleMetrics::intersection_volume_cm3);
  r.mpjpe_mm = aggregate_field(per_sample, &SampleMetrics::mpjpe_mm);
  r.coverage_pct = aggregate_field(per_sample, &SampleMetrics::coverage_pct);
  r.precision_pct = aggregate_field(per_sample, &SampleMetrics::precision_pct);
  r.recall_pct = aggregate_field(per_sample, &SampleMetrics::recall_pct);
  return r;
}

MetricsReport evaluate_batch(const HandModel& model,
                             const std::vector<Grasp>& grasps,
                             const std::vector<GraspSample>& samples,
                             const std::vector<HandParams>& results,
                             const MetricsConfig& cfg,
                             std::vector<SampleMetrics>* per_sample) {
  if (samples.size() != results.size())
    throw DimensionMismatch("samples and results are not aligned");
  std::vector<SampleMetrics> metrics;
  metrics.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const GraspSample& s = samples[i];
    if (s.grasp_index < 0 || s.grasp_index >= static_cast<int>(grasps.size()))
      throw DimensionMismatch("sample references a missing grasp");
    metrics.push_back(evaluate_grasp(model, grasps[s.grasp_index].object,
                                     results[i], s.true_params,
                                     s.target_object, cfg));
  }
  if (per_sample) *per_sample = metrics;
  return aggregate(metrics);
}

namespace {

json aggregate_to_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"std", a.stddev}};
}

json report_to_json(const MetricsReport& r) {
  json j;
  j["n"] = r.n;
  j["intersection_volume_cm3"] = aggregate_to_json(r.intersection_volume_cm3);
  j["mpjpe_mm"] = aggregate_to_json(r.mpjpe_mm);
  j["coverage_pct"] = aggregate_to_json(r.coverage_pct);
  j["precision_pct"] = aggregate_to_json(r.precision_pct);
  j["recall_pct"] = aggregate_to_json(r.recall_pct);
  return j;
}

}  // namespace

void save_report_json(const MetricsReport& report,
                      const std::optional<MetricsReport>& before,
                      const std::string& path) {
  json j;
  j["after"] = report_to_json(report);
  if (before) j["before"] = report_to_json(*before);
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write report: " + path);
  out << j.dump(2);
}

std::string report_markdown(const MetricsReport& report,
                            const std::optional<MetricsReport>& before) {
  auto row = [](const char* name, const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "| %s | %.2f ± %.2f | %.2f ± %.2f | %.1f ± %.1f | "
                  "%.1f ± %.1f | %.1f ± %.1f |\n",
                  name, r.intersection_volume_cm3.mean,
                  r.intersection_volume_cm3.stddev, r.mpjpe_mm.mean,
                  r.mpjpe_mm.stddev, r.coverage_pct.mean, r.coverage_pct.stddev,
                  r.precision_pct.mean, r.precision_pct.stddev,
                  r.recall_pct.mean, r.recall_pct.stddev);
    return std::string(buf);
  };
  std::string out =
      "| | intersection (cm^3) | MPJPE (mm) | coverage (%) | precision (%) "
      "| recall (%) |\n|---|---|---|---|---|---|\n";
  if (before) out += row("before", *before);
  out += row(before ? "after" : "result", report);
  return out;
}

void save_metrics_csv(const std::vector<SampleMetrics>& per_sample,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write metrics: " + path);
  out << "sample,intersection_volume_cm3,mpjpe_mm,coverage_pct,"
         "precision_pct,recall_pct\n";
  char buf[256];
  for (size_t i = 0; i < per_sample.size(); ++i) {
    const SampleMetrics& m = per_sample[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", i,
                  m.intersection_volume_cm3, m.mpjpe_mm, m.coverage_pct,
                  m.precision_pct, m.recall_pct);
    out << buf;
  }
}

}  // namespace contactfit
