#pragma once

#include <stdexcept>
#include <string>

namespace contactfit {

struct DegenerateFace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotWatertight : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyMesh : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileFormat : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StaleCorrespondence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace contactfit
