#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <sstream>

#include "heisenlab/grid.hpp"

using namespace heisenlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("spacing, counts and coordinates") {
  const GridSpec s{2, 3.0, 9.0, 7, 5};
  CHECK(s.h_xy() == 1.0);
  CHECK(s.h_tau() == 4.5);
  CHECK(s.total_points() == 7u * 7u * 7u * 7u * 5u);
  CHECK(s.cell_volume() == 4.5);
  CHECK(s.xy_coord(0) == -3.0);
  CHECK(s.xy_coord(6) == 3.0);
  CHECK(s.tau_coord(4) == 9.0);

  std::vector<int> idx(4);
  for (std::size_t l : {std::size_t{0}, std::size_t{17}, s.line_count() - 1}) {
    s.line_indices(l, idx);
    CHECK(s.line_of(idx) == l);
  }
  // tau is the fastest index, then the last xy axis
  const GroupPoint p = s.point(5);
  CHECK(p.tau == -9.0);
  CHECK(p.y[1] == -2.0);
  CHECK(p.x[0] == -3.0);
  CHECK(s.xy_stride(3) == 5u);
  CHECK(s.xy_stride(0) == 5u * 7u * 7u * 7u);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS((GridSpec{0, 1, 1, 5, 5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{1, -1, 1, 5, 5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{1, 1, 1, 2, 5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(GridField(GridSpec{1, 1, 1, 3, 3}, std::vector<double>(5)), std::invalid_argument);
}

TEST_CASE("pairwise sum matches a long double reference") {
  std::vector<double> v(10007);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * i) + 1e-3 * i;
  long double ref = 0.0L;
  for (double x : v) ref += x;
  CHECK_THAT(pairwise_sum(v), WithinRel(static_cast<double>(ref), 1e-13));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("integrals of a Gaussian") {
  const GridSpec s{1, 6.0, 6.0, 61, 61};
  const GridField g = GridField::sample(s, [](const GroupPoint& e) {
    return std::exp(-e.z_norm_sq() - e.tau * e.tau);
  });
  const double exact = std::pow(M_PI, 1.5);
  CHECK_THAT(trapezoid_integral(g), WithinRel(exact, 1e-10));
  CHECK_THAT(grid_integral(g), WithinRel(exact, 1e-10));
  CHECK(lp_norm(g, INFINITY) == 1.0);
  // ||g||_2^2 = (pi/2)^{3/2}
  CHECK_THAT(lp_norm(g, 2.0), WithinRel(std::pow(M_PI / 2.0, 0.75), 1e-9));
  CHECK_THROWS_AS(lp_norm(g, 0.5), std::invalid_argument);
}

TEST_CASE("field arithmetic requires matching specs") {
  GridField a(GridSpec{1, 1, 1, 3, 3}, 1.0), b(GridSpec{1, 1, 1, 3, 3}, 2.0), c(GridSpec{1, 1, 2, 3, 3}, 0.0);
  CHECK((a + b).max_value() == 3.0);
  CHECK((b - a).min_value() == 1.0);
  CHECK((2.0 * b).sup_norm() == 4.0);
  CHECK_THROWS_AS(a + c, std::invalid_argument);
}

TEST_CASE("binary dump round trip is exact") {
  const GridSpec s{1, 1.25, 2.5, 5, 7};
  GridField f = GridField::sample(s, [](const GroupPoint& e) { return std::sin(e.x[0]) + e.tau / 3.0; });
  f[3] = -0.0;
  std::stringstream ss;
  write_field(ss, f);
  CHECK(ss.str().size() == 5 + 5 * 8 + s.total_points() * 8);
  CHECK(ss.str().substr(0, 5) == "HHGF1");
  const GridField g = read_field(ss);
  CHECK(g.spec == s);
  CHECK(std::memcmp(g.values.data(), f.values.data(), f.size() * sizeof(double)) == 0);

  std::stringstream bad("HHGF2xxxxxxxx");
  CHECK_THROWS(read_field(bad));
  std::stringstream trunc;
  write_field(trunc, f);
  std::stringstream shortened(trunc.str().substr(0, 60));
  CHECK_THROWS(read_field(shortened));
}
