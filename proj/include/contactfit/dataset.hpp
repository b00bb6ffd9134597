#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "contactfit/contact.hpp"
#include "contactfit/hand.hpp"

namespace contactfit {

// Noise model for building perturbed-grasp evaluation data.
struct PerturbConfig {
  double sigma_theta = 0.5;           // per pose coefficient
  double sigma_translation = 50.0;    // mm
  double sigma_rotation_deg = 15.0;
  int n_perturbations_per_grasp = 1;
  std::uint64_t seed = 0;
};

struct Grasp {
  TriMesh object;
  HandParams params;
  std::string object_name;
};

struct GraspSample {
  int grasp_index = 0;
  HandParams true_params;
  HandParams perturbed_params;
  ContactMap target_object;
  ContactMap target_hand;
};

// i.i.d. normal noise on theta and translation; rotation composed with a
// random-axis rotation of normally distributed angle.
HandParams perturb(const HandParams& params, const PerturbConfig& cfg,
                   std::mt19937_64& rng);

// Procedural grasps of primitive objects (sphere, box, cylinder): each digit
// curls at a fixed rate until its capsule first touches the object.
std::vector<Grasp> synth_grasps(const HandModel& model, int n,
                                std::uint64_t seed,
                                const CapsuleConfig& cfg = {});

// The closing move used by synth_grasps: raise each digit curl coefficient
// in 0.02 steps until the digit's capsules first reach the object.
HandParams close_digits(const HandModel& model, HandParams params,
                        const TriMesh& object, const CapsuleConfig& cfg = {});

// n_perturbations_per_grasp samples per grasp; target maps are the capsule
// contact maps at the true pose.
std::vector<GraspSample> make_dataset(const std::vector<Grasp>& grasps,
                                      const HandModel& model,
                                      const PerturbConfig& cfg,
                                      const CapsuleConfig& capsule_cfg = {});

// Directory layout: manifest.json + objects/*.obj + per-sample JSON files.
void save_dataset(const std::vector<Grasp>& grasps,
                  const std::vector<GraspSample>& samples,
                  const std::string& dir);
struct Dataset {
  std::vector<Grasp> grasps;
  std::vector<GraspSample> samples;
};
Dataset load_dataset(const std::string& dir);

// HandParams JSON.
HandParams load_hand_params(const std::string& path);
void save_hand_params(const HandParams& params, const std::string& path);

}  // namespace contactfit
