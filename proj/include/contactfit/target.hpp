#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "contactfit/contact.hpp"
#include "contactfit/hand.hpp"
#include "contactfit/optimize.hpp"

namespace contactfit {

// Where the target contact maps come from. A learned predictor plugs in
// through PrecomputedMaps (train it externally on exported features, then
// feed its output back in).
struct TargetSource {
  struct GroundTruthFile {
    std::string path;  // object map, optional hand map
  };
  struct FromReferencePose {
    HandParams reference;
  };
  struct PrecomputedMaps {
    ContactMap object;
    std::optional<ContactMap> hand;
  };
  struct ObjectOnly {
    ContactMap object;
  };
  std::variant<GroundTruthFile, FromReferencePose, PrecomputedMaps,
               ObjectOnly>
      source;
};

// Produces the target maps. FromReferencePose runs the capsule contact
// model at the reference pose; GroundTruthFile loads per-vertex scalars;
// ObjectOnly drops the hand term.
Targets resolve_targets(const TargetSource& source, const TriMesh& object,
                        const HandModel& model,
                        const CapsuleConfig& cfg = {});

// Per-point features for an external contact predictor: for each sampled
// object point and each hand vertex, the distance to the nearest opposing
// vertex, the dot of the two vertex normals, the dot of the own normal with
// the offset direction, and a hand/object flag.
struct PointFeatures {
  Eigen::MatrixXd values;  // n x 4, columns per column_names()
  static const char* const* column_names();  // 4 entries
};

PointFeatures extract_features(const TriMesh& object, const TriMesh& hand,
                               int n_object_samples, std::uint64_t seed);

// Uniform-width bin index per vertex; value 1.0 lands in the last bin.
Eigen::VectorXi quantize_contact(const ContactMap& map, int n_bins);
// Bin centers, the inverse up to half a bin width.
ContactMap dequantize_contact(const Eigen::VectorXi& bins, int n_bins,
                              ContactMap::Side side);

// ContactMap JSON ({"mesh": "hand"|"object", "values": [...]}) and CSV.
ContactMap load_contact_map(const std::string& path);
void save_contact_map(const ContactMap& map, const std::string& path);
void save_contact_map_csv(const ContactMap& map, const std::string& path);
void save_features_csv(const PointFeatures& features, const std::string& path);

}  // namespace contactfit
