#pragma once

#include <string>

#include "contactfit/contact.hpp"
#include "contactfit/dataset.hpp"
#include "contactfit/metrics.hpp"
#include "contactfit/optimize.hpp"

namespace contactfit {

// One config file drives every command. JSON sections "loss", "optim",
// "perturb", "metrics", "capsule"; keys mirror the struct field names.
// Missing sections and keys keep their defaults; unknown keys are errors.
struct RunConfig {
  LossConfig loss;
  OptimConfig optim;
  PerturbConfig perturb;
  MetricsConfig metrics;
  CapsuleConfig capsule;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

}  // namespace contactfit
