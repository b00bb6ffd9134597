#pragma once

#include <utility>
#include <vector>

#include "contactfit/mesh.hpp"

namespace contactfit {

// Exact nearest-neighbor index over a fixed 3D point set.
// Ties are broken toward the lowest point index.
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vec3> points);

  // (index, distance in mm) of the nearest point.
  std::pair<int, double> nearest(const Vec3& query) const;

  // All indices within `radius` (inclusive) of `query`, sorted ascending.
  std::vector<int> within(const Vec3& query, double radius) const;

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int axis = -1;       // -1 for leaf
    double split = 0.0;  // split coordinate
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end);
  void nearest_rec(int node, const Vec3& q, int& best, double& best_d2) const;
  void within_rec(int node, const Vec3& q, double r2,
                  std::vector<int>& out) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;  // permutation of point indices
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace contactfit
