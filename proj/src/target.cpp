#include "contactfit/target.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "contactfit/errors.hpp"
#include "contactfit/kdtree.hpp"
#include "contactfit/rng.hpp"
#include "json.hpp"

namespace contactfit {

using json = nlohmann::json;

namespace {

ContactMap contact_map_from_json(const json& j) {
  ContactMap map;
  const std::string side = j.at("mesh");
  if (side == "hand")
    map.side = ContactMap::Side::hand;
  else if (side == "object")
    map.side = ContactMap::Side::object;
  else
    throw FileFormat("contact map 'mesh' must be 'hand' or 'object'");
  const auto values = j.at("values").get<std::vector<double>>();
  map.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                 values.size());
  for (int i = 0; i < map.size(); ++i)
    if (!(map.values[i] >= 0.0 && map.values[i] <= 1.0))
      throw FileFormat("contact value outside [0, 1]");
  return map;
}

json contact_map_to_json(const ContactMap& map) {
  json j;
  j["mesh"] = map.side == ContactMap::Side::hand ? "hand" : "object";
  j["values"] = std::vector<double>(map.values.data(),
                                    map.values.data() + map.values.size());
  return j;
}

}  // namespace

ContactMap load_contact_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormat("cannot open contact map: " + path);
  json j;
  try {
    in >> j;
    return contact_map_from_json(j);
  } catch (const json::exception& e) {
    throw FileFormat("bad contact map JSON: " + std::string(e.what()));
  }
}

void save_contact_map(const ContactMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write contact map: " + path);
  out << contact_map_to_json(map).dump();
}

void save_contact_map_csv(const ContactMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write contact map: " + path);
  out << "vertex,contact\n";
  char buf[64];
  for (int i = 0; i < map.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g\n", i, map.values[i]);
    out << buf;
  }
}

Targets resolve_targets(const TargetSource& source, const TriMesh& object,
                        const HandModel& model, const CapsuleConfig& cfg) {
  Targets targets;
  if (const auto* ref =
          std::get_if<TargetSource::FromReferencePose>(&source.source)) {
    const PosedHand posed = pose_hand(model, ref->reference);
    const ContactResult maps = contact_maps(object, posed.mesh, cfg);
    targets.object = maps.object_map;
    targets.hand = maps.hand_map;
  } else if (const auto* file =
                 std::get_if<TargetSource::GroundTruthFile>(&source.source)) {
    std::ifstream in(file->path);
    if (!in) throw FileFormat("cannot open target file: " + file->path);
    json j;
    try {
      in >> j;
      if (j.contains("object")) {
        targets.object = contact_map_from_json(j.at("object"));
        if (j.contains("hand"))
          targets.hand = contact_map_from_json(j.at("hand"));
      } else {
        targets.object = contact_map_from_json(j);  // bare object map
      }
    } catch (const json::exception& e) {
      throw FileFormat("bad target JSON: " + std::string(e.what()));
    }
  } else if (const auto* pre =
                 std::get_if<TargetSource::PrecomputedMaps>(&source.source)) {
    targets.object = pre->object;
    targets.hand = pre->hand;
  } else {
    targets.object = std::get<TargetSource::ObjectOnly>(source.source).object;
  }
  if (targets.object.size() != object.num_vertices())
    throw DimensionMismatch("object target length does not match the mesh");
  if (targets.hand.has_value() &&
      targets.hand->size() != model.rest_mesh.num_vertices())
    throw DimensionMismatch("hand target length does not match the model");
  return targets;
}

const char* const* PointFeatures::column_names() {
  static const char* names[] = {"is_hand", "distance_mm", "normal_dot",
                                "offset_normal_dot"};
  return names;
}

PointFeatures extract_features(const TriMesh& object, const TriMesh& hand,
                               int n_object_samples, std::uint64_t seed) {
  if (object.vertices.empty() || hand.vertices.empty())
    throw EmptyMesh("feature extraction needs both meshes");
  auto rng = make_rng(seed, 0);
  std::uniform_int_distribution<int> pick(0, object.num_vertices() - 1);
  std::vector<int> samples(n_object_samples);
  for (int& s : samples) s = pick(rng);

  const PointIndex object_index(object.vertices);
  const PointIndex hand_index(hand.vertices);
  const int nh = hand.num_vertices();

  PointFeatures features;
  features.values.resize(n_object_samples + nh, 4);
  auto fill_row = [&](Eigen::Index row, const Vec3& p, const Vec3& n,
                      double is_hand, const PointIndex& opposing,
                      const TriMesh& opposing_mesh) {
    const auto [idx, dist] = opposing.nearest(p);
    const Vec3& q = opposing_mesh.vertices[idx];
    const Vec3& qn = opposing_mesh.vertex_normals[idx];
    const Vec3 offset = q - p;
    const double offset_dot =
        dist > 1e-12 ? n.dot(offset / dist) : 0.0;
    features.values.row(row) << is_hand, dist, n.dot(qn), offset_dot;
  };
  for (int i = 0; i < n_object_samples; ++i)
    fill_row(i, object.vertices[samples[i]], object.vertex_normals[samples[i]],
             0.0, hand_index, hand);
  for (int v = 0; v < nh; ++v)
    fill_row(n_object_samples + v, hand.vertices[v], hand.vertex_normals[v],
             1.0, object_index, object);
  return features;
}

void save_features_csv(const PointFeatures& features,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileFormat("cannot write features: " + path);
  const char* const* names = PointFeatures::column_names();
  out << names[0] << ',' << names[1] << ',' << names[2] << ',' << names[3]
      << '\n';
  char buf[160];
  for (Eigen::Index r = 0; r < features.values.rows(); ++r) {
    std::snprintf(buf, sizeof(buf), "%g,%.9g,%.9g,%.9g\n",
                  features.values(r, 0), features.values(r, 1),
                  features.values(r, 2), features.values(r, 3));
    out << buf;
  }
}

Eigen::VectorXi quantize_contact(const ContactMap& map, int n_bins) {
  if (n_bins < 2) throw DimensionMismatch("need at least 2 bins");
  Eigen::VectorXi bins(map.size());
  for (int i = 0; i < map.size(); ++i) {
    const int b = static_cast<int>(std::floor(map.values[i] * n_bins));
    bins[i] = std::min(b, n_bins - 1);  // value 1.0 -> last bin
  }
  return bins;
}

ContactMap dequantize_contact(const Eigen::VectorXi& bins, int n_bins,
                              ContactMap::Side side) {
  ContactMap map;
  map.side = side;
  map.values.resize(bins.size());
  for (Eigen::Index i = 0; i < bins.size(); ++i)
    map.values[i] = (bins[i] + 0.5) / n_bins;
  return map;
}

}  // namespace contactfit
