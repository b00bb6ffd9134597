// contactfit: grasp refinement against target contact maps.
//
// Subcommands: synth-hand, optimize, perturb, evaluate, features, roundtrip.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "contactfit/config.hpp"
#include "contactfit/dataset.hpp"
#include "contactfit/errors.hpp"
#include "contactfit/metrics.hpp"
#include "contactfit/optimize.hpp"
#include "contactfit/rng.hpp"
#include "contactfit/target.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace contactfit;

namespace {

constexpr const char* kToolVersion = "0.1.0";

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FileFormat("cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void prepare_out_dir(const std::string& out, bool force) {
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force)
      throw FileFormat("output directory exists: " + out +
                       " (pass --force to overwrite)");
    fs::remove_all(out);
  }
  fs::create_directories(out);
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw FileFormat("no such file: " + path);
}

struct ManifestBuilder {
  json j;
  Timer timer;

  ManifestBuilder(const std::string& command, const RunConfig& cfg,
                  std::uint64_t seed) {
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["seed"] = seed;
    j["config"] = json::parse(run_config_to_json(cfg));
    j["inputs"] = json::object();
  }
  void input(const std::string& key, const std::string& path) {
    j["inputs"][key] = path;
  }
  void write(const std::string& out_dir) {
    j["timings"] = {{"seconds", timer.seconds()}};
    write_atomic(fs::path(out_dir) / "manifest.json", j.dump(2));
  }
};

RunConfig load_config_opt(const std::string& path) {
  if (path.empty()) return RunConfig{};
  require_file(path);
  return load_run_config(path);
}

TargetSource parse_target_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw FileFormat("target spec must be file:PATH, reference:PATH or "
                     "object-only:PATH");
  const std::string kind = spec.substr(0, colon);
  const std::string path = spec.substr(colon + 1);
  require_file(path);
  if (kind == "file")
    return TargetSource{TargetSource::GroundTruthFile{path}};
  if (kind == "reference")
    return TargetSource{
        TargetSource::FromReferencePose{load_hand_params(path)}};
  if (kind == "object-only")
    return TargetSource{TargetSource::ObjectOnly{load_contact_map(path)}};
  throw FileFormat("unknown target kind: " + kind);
}

void save_loss_trace_csv(const std::vector<double>& trace,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write " + path);
  out << "iteration,loss\n";
  char buf[64];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, trace[i]);
    out << buf;
  }
}

void save_restart_losses_csv(
    const std::vector<std::vector<double>>& per_sample,
    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write " + path);
  out << "sample,restart,final_loss\n";
  char buf[96];
  for (size_t s = 0; s < per_sample.size(); ++s)
    for (size_t r = 0; r < per_sample[s].size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g\n", s, r,
                    per_sample[s][r]);
      out << buf;
    }
}

// ---- subcommands ----------------------------------------------------------

int cmd_synth_hand(const std::string& out, bool force) {
  if (fs::exists(out) && !force)
    throw FileFormat("output exists: " + out + " (pass --force to overwrite)");
  const HandModel model = make_synthetic_hand();
  if (const fs::path dir = fs::path(out).parent_path(); !dir.empty())
    fs::create_directories(dir);
  save_hand_model(model, out);
  std::cout << "wrote " << out << " (" << model.rest_mesh.num_vertices()
            << " vertices, " << model.num_joints() << " joints)\n";
  return 0;
}

int cmd_optimize(const std::string& object_path, const std::string& model_path,
                 const std::string& init_path, const std::string& target_spec,
                 const std::string& config_path, std::uint64_t seed,
                 const std::string& out, int restarts, double scale,
                 bool force) {
  require_file(object_path);
  require_file(model_path);
  require_file(init_path);
  RunConfig cfg = load_config_opt(config_path);
  cfg.optim.seed = seed;
  if (restarts > 0) cfg.optim.n_restart = restarts;

  const TriMesh object = load_mesh(object_path, scale);
  const HandModel model = load_hand_model(model_path);
  const HandParams init = load_hand_params(init_path);
  const TargetSource source = parse_target_spec(target_spec);
  const Targets targets = resolve_targets(source, object, model, cfg.capsule);

  prepare_out_dir(out, force);
  ManifestBuilder manifest("optimize", cfg, seed);
  manifest.input("object", object_path);
  manifest.input("hand_model", model_path);
  manifest.input("init", init_path);
  manifest.input("targets", target_spec);

  const PosedHand before = pose_hand(model, init);
  const ContactResult maps_before =
      contact_maps(object, before.mesh, cfg.capsule);

  const OptimResult result =
      optimize(model, object, init, targets, cfg.loss, cfg.optim, cfg.capsule);

  const PosedHand after = pose_hand(model, result.params);
  const ContactResult maps_after =
      contact_maps(object, after.mesh, cfg.capsule);

  const fs::path dir(out);
  save_hand_params(result.params, (dir / "refined_params.json").string());
  save_mesh(after.mesh, (dir / "posed_hand.obj").string());
  save_loss_trace_csv(result.loss_trace, (dir / "loss_trace.csv").string());
  save_contact_map(maps_before.object_map,
                   (dir / "contact_object_before.json").string());
  save_contact_map(maps_after.object_map,
                   (dir / "contact_object_after.json").string());
  save_contact_map(maps_before.hand_map,
                   (dir / "contact_hand_before.json").string());
  save_contact_map(maps_after.hand_map,
                   (dir / "contact_hand_after.json").string());
  manifest.j["final_loss"] = result.final_loss;
  manifest.j["restart_index"] = result.restart_index;
  manifest.write(out);
  std::printf("final loss %.6g (restart %d of %d)\n", result.final_loss,
              result.restart_index, cfg.optim.n_restart);
  return 0;
}

int cmd_perturb(const std::string& model_path, int n_grasps,
                const std::string& dataset_in, const std::string& config_path,
                std::uint64_t seed, const std::string& out, bool force) {
  require_file(model_path);
  RunConfig cfg = load_config_opt(config_path);
  cfg.perturb.seed = derive_seed(seed, 1);
  const HandModel model = load_hand_model(model_path);

  std::vector<Grasp> grasps;
  if (!dataset_in.empty()) {
    grasps = load_dataset(dataset_in).grasps;
  } else {
    if (n_grasps < 1) throw FileFormat("need --grasps N or --dataset DIR");
    grasps = synth_grasps(model, n_grasps, derive_seed(seed, 0), cfg.capsule);
  }
  const std::vector<GraspSample> samples =
      make_dataset(grasps, model, cfg.perturb, cfg.capsule);

  prepare_out_dir(out, force);
  ManifestBuilder manifest("perturb", cfg, seed);
  manifest.input("hand_model", model_path);
  if (!dataset_in.empty()) manifest.input("dataset", dataset_in);
  save_dataset(grasps, samples, out);
  // save_dataset writes its own manifest.json; keep the run manifest separate
  manifest.j["n_grasps"] = grasps.size();
  manifest.j["n_samples"] = samples.size();
  manifest.j["timings"] = {{"seconds", manifest.timer.seconds()}};
  write_atomic(fs::path(out) / "run_manifest.json", manifest.j.dump(2));
  std::cout << "wrote " << samples.size() << " samples over " << grasps.size()
            << " grasps to " << out << "\n";
  return 0;
}

std::vector<HandParams> load_results_dir(const std::string& dir, size_t n) {
  std::vector<HandParams> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const fs::path p = fs::path(dir) / ("sample_" + std::to_string(i)) /
                       "refined_params.json";
    require_file(p.string());
    out.push_back(load_hand_params(p.string()));
  }
  return out;
}

int cmd_evaluate(const std::string& model_path, const std::string& dataset_dir,
                 const std::string& results_dir,
                 const std::string& config_path, const std::string& out,
                 bool force) {
  require_file(model_path);
  require_file(dataset_dir + "/manifest.json");
  const RunConfig cfg = load_config_opt(config_path);
  const HandModel model = load_hand_model(model_path);
  const Dataset data = load_dataset(dataset_dir);

  prepare_out_dir(out, force);
  ManifestBuilder manifest("evaluate", cfg, 0);
  manifest.input("hand_model", model_path);
  manifest.input("dataset", dataset_dir);

  std::vector<HandParams> before_params;
  before_params.reserve(data.samples.size());
  for (const GraspSample& s : data.samples)
    before_params.push_back(s.perturbed_params);
  std::vector<SampleMetrics> before_samples;
  const MetricsReport before =
      evaluate_batch(model, data.grasps, data.samples, before_params,
                     cfg.metrics, &before_samples);
  save_metrics_csv(before_samples,
                   (fs::path(out) / "metrics_before.csv").string());

  std::optional<MetricsReport> after;
  if (!results_dir.empty()) {
    manifest.input("results", results_dir);
    const std::vector<HandParams> after_params =
        load_results_dir(results_dir, data.samples.size());
    std::vector<SampleMetrics> after_samples;
    after = evaluate_batch(model, data.grasps, data.samples, after_params,
                           cfg.metrics, &after_samples);
    save_metrics_csv(after_samples,
                     (fs::path(out) / "metrics_after.csv").string());
  }

  const MetricsReport& main_report = after ? *after : before;
  const std::optional<MetricsReport> baseline =
      after ? std::optional<MetricsReport>(before) : std::nullopt;
  save_report_json(main_report, baseline,
                   (fs::path(out) / "report.json").string());
  const std::string table = report_markdown(main_report, baseline);
  write_atomic(fs::path(out) / "report.md", table);
  manifest.write(out);
  std::cout << table;
  return 0;
}

int cmd_features(const std::string& object_path, const std::string& model_path,
                 const std::string& init_path, int n_samples,
                 std::uint64_t seed, const std::string& out, double scale,
                 bool force) {
  require_file(object_path);
  require_file(model_path);
  require_file(init_path);
  const TriMesh object = load_mesh(object_path, scale);
  const HandModel model = load_hand_model(model_path);
  const HandParams params = load_hand_params(init_path);
  const PosedHand posed = pose_hand(model, params);
  const PointFeatures features =
      extract_features(object, posed.mesh, n_samples, seed);

  prepare_out_dir(out, force);
  RunConfig cfg;
  ManifestBuilder manifest("features", cfg, seed);
  manifest.input("object", object_path);
  manifest.input("hand_model", model_path);
  manifest.input("init", init_path);
  save_features_csv(features, (fs::path(out) / "features.csv").string());
  manifest.write(out);
  std::cout << "wrote " << features.values.rows() << " feature rows\n";
  return 0;
}

int cmd_roundtrip(const std::string& model_path, int n_grasps,
                  const std::string& config_path, std::uint64_t seed,
                  const std::string& out, int restarts, bool force) {
  require_file(model_path);
  RunConfig cfg = load_config_opt(config_path);
  if (restarts > 0) cfg.optim.n_restart = restarts;
  cfg.perturb.seed = derive_seed(seed, 1);
  const HandModel model = load_hand_model(model_path);

  prepare_out_dir(out, force);
  ManifestBuilder manifest("roundtrip", cfg, seed);
  manifest.input("hand_model", model_path);

  const std::vector<Grasp> grasps =
      synth_grasps(model, n_grasps, derive_seed(seed, 0), cfg.capsule);
  const std::vector<GraspSample> samples =
      make_dataset(grasps, model, cfg.perturb, cfg.capsule);
  save_dataset(grasps, samples, (fs::path(out) / "dataset").string());

  std::vector<HandParams> refined;
  std::vector<std::vector<double>> restart_losses;
  refined.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const GraspSample& s = samples[i];
    const Targets targets{s.target_object, s.target_hand};
    OptimConfig optim = cfg.optim;
    optim.seed = derive_seed(seed, 1000 + i);
    const OptimResult result =
        optimize(model, grasps[s.grasp_index].object, s.perturbed_params,
                 targets, cfg.loss, optim, cfg.capsule);
    const fs::path sdir = fs::path(out) / "results" /
                          ("sample_" + std::to_string(i));
    fs::create_directories(sdir);
    save_hand_params(result.params, (sdir / "refined_params.json").string());
    save_loss_trace_csv(result.loss_trace,
                        (sdir / "loss_trace.csv").string());
    refined.push_back(result.params);
    restart_losses.push_back(result.restart_final_losses);
  }
  save_restart_losses_csv(restart_losses,
                          (fs::path(out) / "restart_losses.csv").string());

  std::vector<HandParams> before_params;
  before_params.reserve(samples.size());
  for (const GraspSample& s : samples)
    before_params.push_back(s.perturbed_params);
  std::vector<SampleMetrics> before_samples, after_samples;
  const MetricsReport before = evaluate_batch(
      model, grasps, samples, before_params, cfg.metrics, &before_samples);
  const MetricsReport after = evaluate_batch(model, grasps, samples, refined,
                                             cfg.metrics, &after_samples);
  save_metrics_csv(before_samples,
                   (fs::path(out) / "metrics_before.csv").string());
  save_metrics_csv(after_samples,
                   (fs::path(out) / "metrics_after.csv").string());
  save_report_json(after, before, (fs::path(out) / "report.json").string());
  const std::string table = report_markdown(after, before);
  write_atomic(fs::path(out) / "report.md", table);
  manifest.write(out);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp refinement against target contact maps"};
  app.require_subcommand(1);

  std::string object_path, model_path, init_path, target_spec, config_path;
  std::string out, dataset_in, results_dir;
  std::uint64_t seed = 0;
  int restarts = 0, n_grasps = 0, n_samples = 512;
  double scale = 1.0;
  bool force = false;

  auto* synth = app.add_subcommand("synth-hand",
                                   "write the procedural test hand model");
  synth->add_option("--out", out, "output model JSON")->required();
  synth->add_flag("--force", force, "overwrite existing output");

  auto* opt = app.add_subcommand("optimize", "refine a grasp");
  opt->add_option("--object", object_path, "object mesh (OBJ/PLY)")
      ->required();
  opt->add_option("--hand-model", model_path, "hand model JSON")->required();
  opt->add_option("--init", init_path, "initial params JSON")->required();
  opt->add_option("--targets", target_spec,
                  "file:PATH | reference:PATH | object-only:PATH")
      ->required();
  opt->add_option("--config", config_path, "run config JSON");
  opt->add_option("--seed", seed, "random seed");
  opt->add_option("--out", out, "output directory")->required();
  opt->add_option("--restarts", restarts, "override n_restart");
  opt->add_option("--scale", scale, "scale applied to the object on load");
  opt->add_flag("--force", force, "overwrite existing output");

  auto* pert = app.add_subcommand("perturb", "build a perturbed-grasp dataset");
  pert->add_option("--hand-model", model_path, "hand model JSON")->required();
  pert->add_option("--grasps", n_grasps, "synthesize N grasps");
  pert->add_option("--dataset", dataset_in, "reuse grasps from a dataset dir");
  pert->add_option("--config", config_path, "run config JSON");
  pert->add_option("--seed", seed, "random seed");
  pert->add_option("--out", out, "output directory")->required();
  pert->add_flag("--force", force, "overwrite existing output");

  auto* eval = app.add_subcommand("evaluate", "metrics over a dataset");
  eval->add_option("--hand-model", model_path, "hand model JSON")->required();
  eval->add_option("--dataset", dataset_in, "dataset directory")->required();
  eval->add_option("--results", results_dir,
                   "refined results directory (before/after report)");
  eval->add_option("--config", config_path, "run config JSON");
  eval->add_option("--out", out, "output directory")->required();
  eval->add_flag("--force", force, "overwrite existing output");

  auto* feat = app.add_subcommand("features",
                                  "per-point features for a contact predictor");
  feat->add_option("--object", object_path, "object mesh (OBJ/PLY)")
      ->required();
  feat->add_option("--hand-model", model_path, "hand model JSON")->required();
  feat->add_option("--init", init_path, "hand params JSON")->required();
  feat->add_option("--samples", n_samples, "object sample count");
  feat->add_option("--seed", seed, "random seed");
  feat->add_option("--out", out, "output directory")->required();
  feat->add_option("--scale", scale, "scale applied to the object on load");
  feat->add_flag("--force", force, "overwrite existing output");

  auto* round = app.add_subcommand(
      "roundtrip", "synthesize, perturb, refine and evaluate");
  round->add_option("--hand-model", model_path, "hand model JSON")->required();
  round->add_option("--grasps", n_grasps, "number of grasps")->required();
  round->add_option("--config", config_path, "run config JSON");
  round->add_option("--seed", seed, "random seed");
  round->add_option("--out", out, "output directory")->required();
  round->add_option("--restarts", restarts, "override n_restart");
  round->add_flag("--force", force, "overwrite existing output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth_hand(out, force);
    if (opt->parsed())
      return cmd_optimize(object_path, model_path, init_path, target_spec,
                          config_path, seed, out, restarts, scale, force);
    if (pert->parsed())
      return cmd_perturb(model_path, n_grasps, dataset_in, config_path, seed,
                         out, force);
    if (eval->parsed())
      return cmd_evaluate(model_path, dataset_in, results_dir, config_path,
                          out, force);
    if (feat->parsed())
      return cmd_features(object_path, model_path, init_path, n_samples, seed,
                          out, scale, force);
    if (round->parsed())
      return cmd_roundtrip(model_path, n_grasps, config_path, seed, out,
                           restarts, force);
  } catch (const FileFormat& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
