#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "heisenlab/group.hpp"

using namespace heisenlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GroupPoint random_point(std::mt19937_64& rng, int n, double scale = 2.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  GroupPoint p = GroupPoint::identity(n);
  for (int i = 0; i < n; ++i) {
    p.x[i] = U(rng);
    p.y[i] = U(rng);
  }
  p.tau = U(rng);
  return p;
}

double max_diff(const GroupPoint& a, const GroupPoint& b) {
  double m = std::abs(a.tau - b.tau);
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max({m, std::abs(a.x[i] - b.x[i]), std::abs(a.y[i] - b.y[i])});
  return m;
}

}  // namespace

TEST_CASE("group law on H^1 by hand") {
  const GroupPoint a = GroupPoint::h1(1.0, 2.0, 3.0);
  const GroupPoint b = GroupPoint::h1(-0.5, 4.0, 1.0);
  const GroupPoint c = group_multiply(a, b);
  CHECK(c.x[0] == 0.5);
  CHECK(c.y[0] == 6.0);
  // 3 + 1 + 2 (1*4 - (-0.5)*2)
  CHECK(c.tau == 14.0);
}

TEST_CASE("inverse, identity and associativity") {
  std::mt19937_64 rng(7);
  for (int n : {1, 2, 3}) {
    for (int k = 0; k < 50; ++k) {
      const GroupPoint a = random_point(rng, n), b = random_point(rng, n), c = random_point(rng, n);
      CHECK(max_diff(group_multiply(group_inverse(a), a), GroupPoint::identity(n)) <= 1e-15);
      CHECK(max_diff(group_multiply(a, GroupPoint::identity(n)), a) == 0.0);
      CHECK(max_diff(group_multiply(group_multiply(a, b), c), group_multiply(a, group_multiply(b, c))) <= 1e-13);
    }
  }
}

TEST_CASE("dilations are automorphisms") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const GroupPoint a = random_point(rng, 2), b = random_point(rng, 2);
    for (double lam : {0.3, 1.7}) {
      CHECK(max_diff(dilate(group_multiply(a, b), lam), group_multiply(dilate(a, lam), dilate(b, lam))) <= 1e-13);
    }
  }
}

TEST_CASE("Koranyi norm is homogeneous, symmetric and subadditive") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const GroupPoint a = random_point(rng, 1), b = random_point(rng, 1);
    CHECK_THAT(koranyi_norm(dilate(a, 3.0)), WithinRel(3.0 * koranyi_norm(a), 1e-14));
    CHECK_THAT(koranyi_norm(group_inverse(a)), WithinRel(koranyi_norm(a), 1e-15));
    CHECK(koranyi_norm(group_multiply(a, b)) <= koranyi_norm(a) + koranyi_norm(b) + 1e-12);
  }
  CHECK_THAT(koranyi_norm(GroupPoint::h1(0.0, 0.0, 16.0)), WithinRel(4.0, 1e-15));
  CHECK_THAT(koranyi_norm(GroupPoint::h1(3.0, 4.0, 0.0)), WithinRel(5.0, 1e-15));
}

TEST_CASE("Koranyi distance is left invariant") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const GroupPoint z = random_point(rng, 2), a = random_point(rng, 2), b = random_point(rng, 2);
    CHECK_THAT(koranyi_distance(group_multiply(z, a), group_multiply(z, b)),
               WithinRel(koranyi_distance(a, b), 1e-12));
  }
  CHECK_THAT(koranyi_distance(GroupPoint::h1(1, 1, 1), GroupPoint::h1(1, 1, 1)), WithinAbs(0.0, 0.0));
}

TEST_CASE("dimension checks") {
  CHECK(homogeneous_dimension(1) == 4);
  CHECK(homogeneous_dimension(3) == 8);
  CHECK_THROWS_AS(GroupPoint({1.0}, {1.0, 2.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(group_multiply(GroupPoint::identity(1), GroupPoint::identity(2)), std::invalid_argument);
}
