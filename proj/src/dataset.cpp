#include "contactfit/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "contactfit/errors.hpp"
#include "contactfit/kdtree.hpp"
#include "contactfit/rng.hpp"
#include "json.hpp"

namespace contactfit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json params_to_json(const HandParams& p) {
  json j;
  j["theta"] = std::vector<double>(p.theta.data(),
                                   p.theta.data() + p.theta.size());
  j["beta"] =
      std::vector<double>(p.beta.data(), p.beta.data() + p.beta.size());
  j["translation"] = {p.translation.x(), p.translation.y(),
                      p.translation.z()};
  j["rotation"] = {p.rotation.x(), p.rotation.y(), p.rotation.z()};
  return j;
}

HandParams params_from_json(const json& j) {
  HandParams p;
  const auto theta = j.at("theta").get<std::vector<double>>();
  p.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
  const auto beta = j.value("beta", std::vector<double>{});
  p.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
  for (int k = 0; k < 3; ++k) {
    p.translation[k] = j.at("translation").at(k);
    p.rotation[k] = j.at("rotation").at(k);
  }
  p.rotation = canonicalize_rotation(p.rotation);
  return p;
}

}  // namespace

HandParams load_hand_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormat("cannot open params file: " + path);
  try {
    json j;
    in >> j;
    return params_from_json(j);
  } catch (const json::exception& e) {
    throw FileFormat("bad params JSON: " + std::string(e.what()));
  }
}

void save_hand_params(const HandParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write params file: " + path);
  out << params_to_json(params).dump(2);
}

HandParams perturb(const HandParams& params, const PerturbConfig& cfg,
                   std::mt19937_64& rng) {
  HandParams out = params;
  std::normal_distribution<double> theta_noise(0.0, cfg.sigma_theta);
  if (cfg.sigma_theta > 0.0)
    for (Eigen::Index i = 0; i < out.theta.size(); ++i)
      out.theta[i] += theta_noise(rng);
  std::normal_distribution<double> t_noise(0.0, cfg.sigma_translation);
  if (cfg.sigma_translation > 0.0)
    for (int k = 0; k < 3; ++k) out.translation[k] += t_noise(rng);
  if (cfg.sigma_rotation_deg > 0.0) {
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
    axis.normalize();
    std::normal_distribution<double> angle_noise(
        0.0, cfg.sigma_rotation_deg * M_PI / 180.0);
    const Eigen::Matrix3d noise = axis_angle_to_matrix(axis * angle_noise(rng));
    out.rotation =
        matrix_to_axis_angle(noise * axis_angle_to_matrix(out.rotation));
  }
  return out;
}

namespace {

// Vertices owned by each digit: dominant skinning joint in the digit chain.
std::array<std::vector<int>, 3> digit_vertices(const HandModel& model) {
  const std::array<std::pair<int, int>, 3> chains = {{{1, 2}, {3, 4}, {5, 6}}};
  std::array<std::vector<int>, 3> out;
  for (int v = 0; v < model.rest_mesh.num_vertices(); ++v) {
    int dominant;
    model.skinning_weights.row(v).maxCoeff(&dominant);
    for (int d = 0; d < 3; ++d)
      if (dominant == chains[d].first || dominant == chains[d].second)
        out[d].push_back(v);
  }
  return out;
}

double min_capsule_contact_distance(const TriMesh& object,
                                    const PointIndex& object_index,
                                    const TriMesh& hand,
                                    const std::vector<int>& verts,
                                    const CapsuleConfig& cfg) {
  double best = std::numeric_limits<double>::infinity();
  for (const int v : verts) {
    const auto [idx, dist] = object_index.nearest(hand.vertices[v]);
    (void)dist;
    best = std::min(best, capsule_distance(hand.vertices[v],
                                           object.vertices[idx],
                                           object.vertex_normals[idx], cfg));
  }
  return best;
}

}  // namespace

HandParams close_digits(const HandModel& model, HandParams params,
                        const TriMesh& object, const CapsuleConfig& cfg) {
  const PointIndex object_index(object.vertices);
  const auto digits = digit_vertices(model);
  constexpr double kStep = 0.02;
  constexpr double kMaxCurl = 1.8;
  for (int d = 0; d < 3; ++d) {  // curl coefficients are columns 0..2
    while (params.theta[d] < kMaxCurl) {
      const PosedHand posed = pose_hand(model, params);
      if (min_capsule_contact_distance(object, object_index, posed.mesh,
                                       digits[d], cfg) <= cfg.c_rad)
        break;
      params.theta[d] += kStep;
    }
  }
  return params;
}

std::vector<Grasp> synth_grasps(const HandModel& model, int n,
                                std::uint64_t seed,
                                const CapsuleConfig& cfg) {
  std::vector<Grasp> grasps;
  grasps.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Grasp grasp;
    double top_radius;  // vertical half-extent of the object
    const int kind = i % 3;
    if (kind == 0) {
      const double r = 20.0 + 20.0 * u01(rng);
      top_radius = r;
      grasp.object = make_icosphere(r, 2);
      grasp.object_name = "sphere";
    } else if (kind == 1) {
      const Vec3 half(15.0 + 15.0 * u01(rng), 15.0 + 15.0 * u01(rng),
                      15.0 + 15.0 * u01(rng));
      top_radius = half.z();
      grasp.object = make_grid_box(Vec3::Zero(), 2.0 * half, 4, 4, 4);
      grasp.object_name = "box";
    } else {
      const double r = 20.0 + 20.0 * u01(rng);
      const double h = 30.0 + 30.0 * u01(rng);
      top_radius = r;
      // lying along y
      Eigen::Matrix3d rot =
          axis_angle_to_matrix(Vec3(M_PI / 2.0, 0.0, 0.0));
      grasp.object = transformed(make_cylinder(r, h, 24), rot, Vec3::Zero());
      grasp.object_name = "cylinder";
    }
    // place the object under the palm/finger span
    const Vec3 center(-15.0, 0.0, -(top_radius + 15.0));
    for (Vec3& v : grasp.object.vertices) v += center;
    grasp.object = compute_normals(std::move(grasp.object));

    HandParams params = model.zero_params();
    std::normal_distribution<double> jitter_t(0.0, 2.0);
    for (int k = 0; k < 3; ++k) params.translation[k] += jitter_t(rng);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    axis.normalize();
    std::normal_distribution<double> jitter_r(0.0, 3.0 * M_PI / 180.0);
    params.rotation = canonicalize_rotation(axis * jitter_r(rng));
    grasp.params = close_digits(model, params, grasp.object, cfg);
    grasps.push_back(std::move(grasp));
  }
  return grasps;
}

std::vector<GraspSample> make_dataset(const std::vector<Grasp>& grasps,
                                      const HandModel& model,
                                      const PerturbConfig& cfg,
                                      const CapsuleConfig& capsule_cfg) {
  std::vector<GraspSample> samples;
  samples.reserve(grasps.size() * cfg.n_perturbations_per_grasp);
  for (size_t g = 0; g < grasps.size(); ++g) {
    const PosedHand posed = pose_hand(model, grasps[g].params);
    const ContactResult maps =
        contact_maps(grasps[g].object, posed.mesh, capsule_cfg);
    for (int k = 0; k < cfg.n_perturbations_per_grasp; ++k) {
      const std::uint64_t sample_index =
          g * static_cast<std::uint64_t>(cfg.n_perturbations_per_grasp) + k;
      auto rng = make_rng(cfg.seed, sample_index);
      GraspSample s;
      s.grasp_index = static_cast<int>(g);
      s.true_params = grasps[g].params;
      s.perturbed_params = perturb(grasps[g].params, cfg, rng);
      s.target_object = maps.object_map;
      s.target_hand = maps.hand_map;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

void save_dataset(const std::vector<Grasp>& grasps,
                  const std::vector<GraspSample>& samples,
                  const std::string& dir) {
  fs::create_directories(fs::path(dir) / "objects");
  json manifest;
  manifest["format"] = "contactfit-dataset";
  manifest["version"] = 1;
  json jgrasps = json::array();
  for (size_t g = 0; g < grasps.size(); ++g) {
    const std::string rel =
        "objects/obj_" + std::to_string(g) + ".obj";
    save_mesh(grasps[g].object, (fs::path(dir) / rel).string());
    json jg;
    jg["object"] = rel;
    jg["object_name"] = grasps[g].object_name;
    jg["true_params"] = params_to_json(grasps[g].params);
    jgrasps.push_back(jg);
  }
  manifest["grasps"] = jgrasps;
  json jsamples = json::array();
  for (size_t s = 0; s < samples.size(); ++s) {
    const fs::path sample_dir =
        fs::path(dir) / ("sample_" + std::to_string(s));
    fs::create_directories(sample_dir);
    save_hand_params(samples[s].perturbed_params,
                     (sample_dir / "perturbed_params.json").string());
    save_hand_params(samples[s].true_params,
                     (sample_dir / "true_params.json").string());
    std::ofstream tout(sample_dir / "targets.json");
    json jt;
    jt["object"] = {{"mesh", "object"},
                    {"values", std::vector<double>(
                                   samples[s].target_object.values.data(),
                                   samples[s].target_object.values.data() +
                                       samples[s].target_object.size())}};
    jt["hand"] = {{"mesh", "hand"},
                  {"values", std::vector<double>(
                                 samples[s].target_hand.values.data(),
                                 samples[s].target_hand.values.data() +
                                     samples[s].target_hand.size())}};
    tout << jt.dump();
    json js;
    js["grasp"] = samples[s].grasp_index;
    js["dir"] = "sample_" + std::to_string(s);
    jsamples.push_back(js);
  }
  manifest["samples"] = jsamples;
  std::ofstream mout(fs::path(dir) / "manifest.json");
  mout << manifest.dump(2);
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) throw FileFormat("cannot open dataset manifest in " + dir);
  json manifest;
  try {
    min >> manifest;
  } catch (const json::exception& e) {
    throw FileFormat("bad dataset manifest: " + std::string(e.what()));
  }
  Dataset data;
  try {
    for (const auto& jg : manifest.at("grasps")) {
      Grasp g;
      g.object =
          load_mesh((fs::path(dir) / jg.at("object").get<std::string>())
                        .string());
      g.object_name = jg.value("object_name", "");
      g.params = params_from_json(jg.at("true_params"));
      data.grasps.push_back(std::move(g));
    }
    for (const auto& js : manifest.at("samples")) {
      GraspSample s;
      s.grasp_index = js.at("grasp");
      const fs::path sample_dir =
          fs::path(dir) / js.at("dir").get<std::string>();
      s.perturbed_params =
          load_hand_params((sample_dir / "perturbed_params.json").string());
      s.true_params =
          load_hand_params((sample_dir / "true_params.json").string());
      std::ifstream tin(sample_dir / "targets.json");
      json jt;
      tin >> jt;
      auto read_map = [](const json& j, ContactMap::Side side) {
        ContactMap m;
        m.side = side;
        const auto values = j.at("values").get<std::vector<double>>();
        m.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                     values.size());
        return m;
      };
      s.target_object = read_map(jt.at("object"), ContactMap::Side::object);
      s.target_hand = read_map(jt.at("hand"), ContactMap::Side::hand);
      data.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FileFormat("bad dataset: " + std::string(e.what()));
  }
  return data;
}

}  // namespace contactfit
