#include <filesystem>

#include "contactfit/config.hpp"
#include "contactfit/errors.hpp"
#include "doctest.h"

using namespace contactfit;

TEST_CASE("an empty config keeps every default") {
  const RunConfig cfg = run_config_from_json("{}");
  CHECK(cfg.loss.lambda_miss == 3.0);
  CHECK(cfg.loss.lambda_object == 3.0);
  CHECK(cfg.loss.lambda_pen == 1.0);
  CHECK(cfg.loss.c_pen == 2.0);
  CHECK(cfg.optim.learning_rate == 0.01);
  CHECK(cfg.optim.iterations == 250);
  CHECK(cfg.optim.n_restart == 1);
  CHECK(cfg.optim.grad_scale.beta == 0.0);
  CHECK(cfg.perturb.sigma_theta == 0.5);
  CHECK(cfg.perturb.sigma_translation == 50.0);
  CHECK(cfg.perturb.sigma_rotation_deg == 15.0);
  CHECK(cfg.metrics.contact_band == 2.0);
  CHECK(cfg.metrics.contact_threshold == 0.4);
  CHECK(cfg.capsule.c_top == 0.5);
  CHECK(cfg.capsule.c_bot == 1.0);
  CHECK(cfg.capsule.c_rad == 1.0);
}

TEST_CASE("partial sections override only the named keys") {
  const RunConfig cfg = run_config_from_json(
      R"({"optim": {"iterations": 10, "grad_scale": {"rotation": 0.5}},
          "loss": {"lambda_pen": 7}})");
  CHECK(cfg.optim.iterations == 10);
  CHECK(cfg.optim.learning_rate == 0.01);  // untouched
  CHECK(cfg.optim.grad_scale.rotation == 0.5);
  CHECK(cfg.optim.grad_scale.theta == 1.0);
  CHECK(cfg.loss.lambda_pen == 7.0);
  CHECK(cfg.loss.lambda_miss == 3.0);
}

TEST_CASE("config JSON roundtrip") {
  RunConfig cfg;
  cfg.optim.iterations = 42;
  cfg.optim.seed = 1234;
  cfg.perturb.sigma_translation = 12.5;
  cfg.metrics.voxel_size = 0.5;
  cfg.capsule.c_rad = 1.5;
  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.optim.iterations == 42);
  CHECK(back.optim.seed == 1234);
  CHECK(back.perturb.sigma_translation == 12.5);
  CHECK(back.metrics.voxel_size == 0.5);
  CHECK(back.capsule.c_rad == 1.5);
}

TEST_CASE("config file roundtrip and missing file error") {
  RunConfig cfg;
  cfg.optim.n_restart = 4;
  const std::string path =
      (std::filesystem::temp_directory_path() / "run_config.json").string();
  save_run_config(cfg, path);
  CHECK(load_run_config(path).optim.n_restart == 4);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_run_config(path), FileFormat);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(run_config_from_json(R"({"losss": {}})"), FileFormat);
  CHECK_THROWS_AS(run_config_from_json(R"({"loss": {"lambda": 1}})"),
                  FileFormat);
  CHECK_THROWS_AS(
      run_config_from_json(R"({"optim": {"grad_scale": {"gamma": 1}}})"),
      FileFormat);
}

TEST_CASE("malformed JSON and invalid values are rejected") {
  CHECK_THROWS_AS(run_config_from_json("{"), FileFormat);
  CHECK_THROWS_AS(run_config_from_json(R"({"loss": {"c_pen": "two"}})"),
                  FileFormat);
  CHECK_THROWS_AS(
      run_config_from_json(R"({"perturb": {"sigma_theta": -1}})"), FileFormat);
  CHECK_THROWS_AS(
      run_config_from_json(R"({"metrics": {"voxel_size": 0}})"), FileFormat);
}
