#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contactfit/dataset.hpp"
#include "contactfit/hand.hpp"

namespace contactfit {

struct MetricsConfig {
  double contact_band = 2.0;      // mm
  double contact_threshold = 0.4;
  double voxel_size = 1.0;        // mm
};

// One evaluated grasp.
struct SampleMetrics {
  double intersection_volume_cm3 = 0;
  double mpjpe_mm = 0;
  double coverage_pct = 0;
  double precision_pct = 0;
  double recall_pct = 0;
};

struct Aggregate {
  double mean = 0;
  double stddev = 0;  // population std
};

struct MetricsReport {
  Aggregate intersection_volume_cm3, mpjpe_mm, coverage_pct, precision_pct,
      recall_pct;
  int n = 0;
};

// Mean Euclidean distance between corresponding joints.
double mpjpe(const std::vector<Vec3>& pred_joints,
             const std::vector<Vec3>& gt_joints);

// Percentage of hand vertices with signed distance to the object in
// [-contact_band, +contact_band]. The object must be watertight.
double contact_coverage(const TriMesh& hand, const TriMesh& object,
                        const MetricsConfig& cfg);

// Predicted contact: object vertex within contact_band (unsigned, nearest
// point on the hand surface). Ground truth: gt value >= contact_threshold.
// Returns (precision %, recall %); 100 when no positives are predicted
// (precision) or none exist in the ground truth (recall).
std::pair<double, double> contact_precision_recall(const TriMesh& hand,
                                                   const TriMesh& object,
                                                   const ContactMap& gt_contact,
                                                   const MetricsConfig& cfg);

// All metrics for one posed grasp against its ground truth.
SampleMetrics evaluate_grasp(const HandModel& model, const TriMesh& object,
                             const HandParams& params,
                             const HandParams& gt_params,
                             const ContactMap& gt_object_contact,
                             const MetricsConfig& cfg);

MetricsReport aggregate(const std::vector<SampleMetrics>& per_sample);

// results[i] is the pose to score for samples[i] (e.g. the refined pose, or
// the perturbed pose for a before-refinement baseline).
MetricsReport evaluate_batch(const HandModel& model,
                             const std::vector<Grasp>& grasps,
                             const std::vector<GraspSample>& samples,
                             const std::vector<HandParams>& results,
                             const MetricsConfig& cfg,
                             std::vector<SampleMetrics>* per_sample = nullptr);

// Report files: JSON, a Markdown before/after table, and per-sample CSV.
void save_report_json(const MetricsReport& report,
                      const std::optional<MetricsReport>& before,
                      const std::string& path);
std::string report_markdown(const MetricsReport& report,
                            const std::optional<MetricsReport>& before);
void save_metrics_csv(const std::vector<SampleMetrics>& per_sample,
                      const std::string& path);

}  // namespace contactfit
