#include "contactfit/config.hpp"

#include <fstream>
#include <initializer_list>

#include "contactfit/errors.hpp"
#include "json.hpp"

namespace contactfit {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw FileFormat("unknown config key '" + key + "' in " + section);
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FileFormat("bad config JSON: " + std::string(e.what()));
  }
  check_keys(j, "config", {"loss", "optim", "perturb", "metrics", "capsule"});
  RunConfig cfg;
  try {
    if (j.contains("loss")) {
      const json& s = j["loss"];
      check_keys(s, "loss",
                 {"lambda_miss", "lambda_object", "lambda_pen", "c_pen"});
      get(s, "lambda_miss", cfg.loss.lambda_miss);
      get(s, "lambda_object", cfg.loss.lambda_object);
      get(s, "lambda_pen", cfg.loss.lambda_pen);
      get(s, "c_pen", cfg.loss.c_pen);
    }
    if (j.contains("optim")) {
      const json& s = j["optim"];
      check_keys(s, "optim",
                 {"learning_rate", "iterations", "grad_scale", "n_restart",
                  "restart_translation_sigma", "restart_rotation_sigma_deg",
                  "adam_beta1", "adam_beta2", "adam_eps", "seed"});
      get(s, "learning_rate", cfg.optim.learning_rate);
      get(s, "iterations", cfg.optim.iterations);
      get(s, "n_restart", cfg.optim.n_restart);
      get(s, "restart_translation_sigma",
          cfg.optim.restart_translation_sigma);
      get(s, "restart_rotation_sigma_deg",
          cfg.optim.restart_rotation_sigma_deg);
      get(s, "adam_beta1", cfg.optim.adam_beta1);
      get(s, "adam_beta2", cfg.optim.adam_beta2);
      get(s, "adam_eps", cfg.optim.adam_eps);
      get(s, "seed", cfg.optim.seed);
      if (s.contains("grad_scale")) {
        const json& g = s["grad_scale"];
        check_keys(g, "optim.grad_scale",
                   {"theta", "beta", "translation", "rotation"});
        get(g, "theta", cfg.optim.grad_scale.theta);
        get(g, "beta", cfg.optim.grad_scale.beta);
        get(g, "translation", cfg.optim.grad_scale.translation);
        get(g, "rotation", cfg.optim.grad_scale.rotation);
      }
    }
    if (j.contains("perturb")) {
      const json& s = j["perturb"];
      check_keys(s, "perturb",
                 {"sigma_theta", "sigma_translation", "sigma_rotation_deg",
                  "n_perturbations_per_grasp", "seed"});
      get(s, "sigma_theta", cfg.perturb.sigma_theta);
      get(s, "sigma_translation", cfg.perturb.sigma_translation);
      get(s, "sigma_rotation_deg", cfg.perturb.sigma_rotation_deg);
      get(s, "n_perturbations_per_grasp",
          cfg.perturb.n_perturbations_per_grasp);
      get(s, "seed", cfg.perturb.seed);
      if (cfg.perturb.sigma_theta < 0 || cfg.perturb.sigma_translation < 0 ||
          cfg.perturb.sigma_rotation_deg < 0)
        throw FileFormat("perturbation sigmas must be >= 0");
    }
    if (j.contains("metrics")) {
      const json& s = j["metrics"];
      check_keys(s, "metrics",
                 {"contact_band", "contact_threshold", "voxel_size"});
      get(s, "contact_band", cfg.metrics.contact_band);
      get(s, "contact_threshold", cfg.metrics.contact_threshold);
      get(s, "voxel_size", cfg.metrics.voxel_size);
      if (cfg.metrics.contact_band <= 0 || cfg.metrics.contact_threshold <= 0 ||
          cfg.metrics.voxel_size <= 0)
        throw FileFormat("metrics config values must be positive");
    }
    if (j.contains("capsule")) {
      const json& s = j["capsule"];
      check_keys(s, "capsule", {"c_top", "c_bot", "c_rad"});
      get(s, "c_top", cfg.capsule.c_top);
      get(s, "c_bot", cfg.capsule.c_bot);
      get(s, "c_rad", cfg.capsule.c_rad);
    }
  } catch (const json::exception& e) {
    throw FileFormat("bad config value: " + std::string(e.what()));
  }
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["loss"] = {{"lambda_miss", cfg.loss.lambda_miss},
               {"lambda_object", cfg.loss.lambda_object},
               {"lambda_pen", cfg.loss.lambda_pen},
               {"c_pen", cfg.loss.c_pen}};
  j["optim"] = {
      {"learning_rate", cfg.optim.learning_rate},
      {"iterations", cfg.optim.iterations},
      {"n_restart", cfg.optim.n_restart},
      {"restart_translation_sigma", cfg.optim.restart_translation_sigma},
      {"restart_rotation_sigma_deg", cfg.optim.restart_rotation_sigma_deg},
      {"adam_beta1", cfg.optim.adam_beta1},
      {"adam_beta2", cfg.optim.adam_beta2},
      {"adam_eps", cfg.optim.adam_eps},
      {"seed", cfg.optim.seed},
      {"grad_scale",
       {{"theta", cfg.optim.grad_scale.theta},
        {"beta", cfg.optim.grad_scale.beta},
        {"translation", cfg.optim.grad_scale.translation},
        {"rotation", cfg.optim.grad_scale.rotation}}}};
  j["perturb"] = {
      {"sigma_theta", cfg.perturb.sigma_theta},
      {"sigma_translation", cfg.perturb.sigma_translation},
      {"sigma_rotation_deg", cfg.perturb.sigma_rotation_deg},
      {"n_perturbations_per_grasp", cfg.perturb.n_perturbations_per_grasp},
      {"seed", cfg.perturb.seed}};
  j["metrics"] = {{"contact_band", cfg.metrics.contact_band},
                  {"contact_threshold", cfg.metrics.contact_threshold},
                  {"voxel_size", cfg.metrics.voxel_size}};
  j["capsule"] = {{"c_top", cfg.capsule.c_top},
                  {"c_bot", cfg.capsule.c_bot},
                  {"c_rad", cfg.capsule.c_rad}};
  return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormat("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return run_config_from_json(text);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write config: " + path);
  out << run_config_to_json(cfg);
}

}  // namespace contactfit
