#include <algorithm>
#include <limits>
#include <random>

#include "contactfit/errors.hpp"
#include "contactfit/kdtree.hpp"
#include "doctest.h"

using namespace contactfit;

namespace {

std::vector<Vec3> random_points(int n, std::uint64_t seed, double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

std::pair<int, double> linear_nearest(const std::vector<Vec3>& pts,
                                      const Vec3& q) {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2)};
}

}  // namespace

TEST_CASE("query on an indexed point returns that point at distance 0") {
  const auto pts = random_points(200, 3, 100.0);
  const PointIndex index(pts);
  for (int i = 0; i < 200; i += 17) {
    const auto [idx, dist] = index.nearest(pts[i]);
    CHECK(idx == i);
    CHECK(dist == 0.0);
  }
}

TEST_CASE("two-point example") {
  const std::vector<Vec3> pts = {{0, 0, 0}, {10, 0, 0}};
  const PointIndex index(pts);
  const auto [idx, dist] = index.nearest({4, 0, 0});
  CHECK(idx == 0);
  CHECK(dist == doctest::Approx(4.0));
}

TEST_CASE("nearest matches the linear scan on random inputs") {
  for (const int n : {1, 2, 17, 100, 1000, 2000}) {
    const auto pts = random_points(n, 1000 + n, 50.0);
    const PointIndex index(pts);
    const auto queries = random_points(100, 2000 + n, 60.0);
    for (const Vec3& q : queries) {
      const auto [idx, dist] = index.nearest(q);
      const auto [lidx, ldist] = linear_nearest(pts, q);
      CHECK(idx == lidx);
      CHECK(dist == doctest::Approx(ldist).epsilon(1e-12));
    }
  }
}

TEST_CASE("ties break to the lowest index") {
  // symmetric pair around the query
  const std::vector<Vec3> pts = {{5, 0, 0}, {-5, 0, 0}, {0, 5, 0}, {0, -5, 0}};
  const PointIndex index(pts);
  const auto [idx, dist] = index.nearest({0, 0, 0});
  CHECK(idx == 0);
  CHECK(dist == doctest::Approx(5.0));
}

TEST_CASE("within returns all points inside the radius, sorted, inclusive") {
  const auto pts = random_points(500, 77, 30.0);
  const PointIndex index(pts);
  const Vec3 q(1.0, -2.0, 3.0);
  const double radius = 12.0;
  const auto hits = index.within(q, radius);
  CHECK(std::is_sorted(hits.begin(), hits.end()));
  std::vector<int> expected;
  for (int i = 0; i < 500; ++i)
    if ((pts[i] - q).norm() <= radius) expected.push_back(i);
  CHECK(hits == expected);
}

TEST_CASE("within includes points exactly on the boundary") {
  const std::vector<Vec3> pts = {{3, 0, 0}, {0, 4, 0}};
  const PointIndex index(pts);
  const auto hits = index.within({0, 0, 0}, 3.0);
  CHECK(hits == std::vector<int>{0});
}

TEST_CASE("an empty point set is rejected") {
  CHECK_THROWS_AS(PointIndex(std::vector<Vec3>{}), EmptyMesh);
}
