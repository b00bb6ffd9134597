#include "contactfit/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contactfit/errors.hpp"

namespace contactfit {

namespace {
constexpr int kLeafSize = 16;
}

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw EmptyMesh("PointIndex over empty point set");
  order_.resize(points_.size());
  for (size_t i = 0; i < points_.size(); ++i) order_[i] = static_cast<int>(i);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int PointIndex::build(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointIndex::nearest_rec(int node, const Vec3& q, int& best,
                             double& best_d2) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  nearest_rec(near, q, best, best_d2);
  if (delta * delta <= best_d2)  // equal distance may still hold a lower index
    nearest_rec(far, q, best, best_d2);
}

std::pair<int, double> PointIndex::nearest(const Vec3& query) const {
  int best = std::numeric_limits<int>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(root_, query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

void PointIndex::within_rec(int node, const Vec3& q, double r2,
                            std::vector<int>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  if (delta <= 0 || delta * delta <= r2) within_rec(n.left, q, r2, out);
  if (delta >= 0 || delta * delta <= r2) within_rec(n.right, q, r2, out);
}

std::vector<int> PointIndex::within(const Vec3& query, double radius) const {
  std::vector<int> out;
  within_rec(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace contactfit
