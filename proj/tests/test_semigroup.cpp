#include <catch2/catch_amalgamated.hpp>

#include "heisenlab/semigroup.hpp"

using namespace heisenlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GridField bump(const GridSpec& s, double cx, double ct, double w) {
  return GridField::sample(s, [&](const GroupPoint& e) {
    const double dx = e.x[0] - cx, dt = e.tau - ct;
    return std::exp(-(dx * dx + e.y[0] * e.y[0]) / (w * w) - dt * dt / (w * w));
  });
}

}  // namespace

TEST_CASE("interpolation is exact on multilinear data and zero outside") {
  const GridSpec s{1, 2.0, 3.0, 9, 13};
  const GridField f = GridField::sample(s, [](const GroupPoint& e) {
    return 1.0 + e.x[0] - 2.0 * e.y[0] + 0.5 * e.tau + e.x[0] * e.y[0] * e.tau;
  });
  for (const GroupPoint& p : {GroupPoint::h1(0.1, -0.7, 1.3), GroupPoint::h1(-1.9, 1.2, -2.9)}) {
    CHECK_THAT(interpolate(f, p), WithinAbs(1.0 + p.x[0] - 2.0 * p.y[0] + 0.5 * p.tau + p.x[0] * p.y[0] * p.tau, 1e-12));
  }
  CHECK(interpolate(f, GroupPoint::h1(5.0, 0.0, 0.0)) == 0.0);
  CHECK(interpolate(f, GroupPoint::h1(0.0, 0.0, -3.5)) == 0.0);
}

TEST_CASE("fast and naive convolution agree") {
  const GridSpec s{1, 2.0, 4.0, 9, 15};
  const GridField f = bump(s, 0.3, -0.5, 0.8);
  const GridField g = bump(s, -0.2, 0.4, 0.6);
  const GridField a = heisenberg_convolve(f, g, 0.0);
  const GridField b = heisenberg_convolve_naive(f, g);
  CHECK((a - b).sup_norm() <= 1e-12 * b.sup_norm());
  CHECK_THROWS_AS(heisenberg_convolve(f, GridField(GridSpec{1, 2.0, 4.0, 9, 13})), std::invalid_argument);
}

TEST_CASE("discrete delta is the identity") {
  const GridSpec s{1, 2.0, 4.0, 17, 33};
  const GridField f = bump(s, 0.2, 0.3, 0.7);
  GridField delta(s);
  std::vector<int> mid{8, 8};
  delta[s.line_of(mid) * s.line_length() + 16] = 1.0 / s.cell_volume();
  const GridField c = heisenberg_convolve(f, delta);
  CHECK((c - f).sup_norm() <= 1e-12);
}

TEST_CASE("positivity and Young's inequality") {
  const GridSpec s{1, 3.0, 6.0, 17, 25};
  const GridField f = bump(s, 0.5, 0.7, 0.9);
  const GridField g = bump(s, -0.3, -1.0, 0.6);
  const GridField c = heisenberg_convolve(f, g);
  CHECK(c.min_value() >= 0.0);
  CHECK(lp_norm(c, 1.0) <= lp_norm(f, 1.0) * lp_norm(g, 1.0) * (1.0 + 1e-12));
}

TEST_CASE("semigroup at t = 0 returns the input") {
  const GridSpec s{1, 2.0, 4.0, 9, 9};
  const GridField f = bump(s, 0.0, 0.0, 0.7);
  CHECK(apply_semigroup(f, 0.0, SemigroupBackend::kernel()).values == f.values);
  CHECK(apply_semigroup(f, 0.0, SemigroupBackend::fd()).values == f.values);
  CHECK_THROWS_AS(apply_semigroup(f, -1.0, SemigroupBackend::fd()), std::invalid_argument);
}

TEST_CASE("kernel backend rejects an under-resolved kernel") {
  const GridSpec s{1, 8.0, 40.0, 48, 48};
  const GridField f = bump(s, 0.0, 0.0, 2.0);
  CHECK_THROWS_WITH(apply_semigroup(f, 0.05, SemigroupBackend::kernel()),
                    Catch::Matchers::ContainsSubstring("under-resolved"));
  CHECK_NOTHROW(apply_semigroup(f, 0.05, SemigroupBackend::fd()));
}

TEST_CASE("kernel and fd backends agree on a smooth bump") {
  const GridSpec s{1, 4.0, 10.0, 41, 67};
  const GridField f = bump(s, 0.3, 0.5, 1.0);
  const double t = 0.1;
  const GridField k = apply_semigroup(f, t, SemigroupBackend::kernel());
  const GridField d = apply_semigroup(f, t, SemigroupBackend::fd());
  // reference on every 4th xy node and every 3rd tau node of s
  const GridSpec coarse{1, 4.0, 10.0, 11, 23};
  const GridField exact = semigroup_to_grid(f, t, coarse);
  const double peak = exact.sup_norm();
  double ek = 0.0, ed = 0.0;
  std::vector<int> ci(2), fi(2);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    coarse.line_indices(i / coarse.line_length(), ci);
    for (int a = 0; a < 2; ++a) fi[a] = 4 * ci[a];
    const std::size_t j = s.line_of(fi) * s.line_length() + 3 * (i % coarse.line_length());
    ek = std::max(ek, std::abs(k[j] - exact[i]));
    ed = std::max(ed, std::abs(d[j] - exact[i]));
  }
  CHECK(ed <= 2e-2 * peak);
  CHECK(ek <= 2e-2 * peak);
  CHECK((k - d).sup_norm() <= 3e-2 * peak);
  // heat flow lowers the maximum and keeps the mass while the bump is inside the box
  CHECK(d.sup_norm() < f.sup_norm());
  CHECK_THAT(grid_integral(d), WithinRel(grid_integral(f), 1e-3));
}

TEST_CASE("fd backend is a semigroup in time") {
  const GridSpec s{1, 4.0, 10.0, 21, 31};
  const GridField f = bump(s, 0.0, 0.0, 1.0);
  const auto be = SemigroupBackend::fd();
  const GridField once = apply_semigroup(f, 0.2, be);
  const GridField twice = apply_semigroup(apply_semigroup(f, 0.1, be), 0.1, be);
  CHECK((once - twice).sup_norm() <= 2e-3 * once.sup_norm());
  CHECK(fd_substeps(s, 0.2) >= 1);
}

TEST_CASE("semigroup law defect on a small box") {
  const GridSpec box{1, 4.0, 12.0, 25, 73};
  const double d = semigroup_defect(0.5, 0.5, box);
  const double peak = kernel_value(GroupPoint::identity(1), 1.0);
  CHECK(d <= 1e-2 * peak);
}

TEST_CASE("Lp-Lq decay exponents") {
  const GridSpec in{1, 0.75, 0.5, 13, 13};
  const GridField f = GridField::sample(in, [](const GroupPoint& e) {
    const double r = koranyi_norm(e) / 0.5;
    return r < 1.0 ? std::pow(1.0 - r * r, 3) : 0.0;
  });
  const std::vector<double> times{0.5, 1.0, 2.0, 5.0};
  const DecayFit inf = lp_lq_decay_fit(f, 1.0, INFINITY, times);
  CHECK(inf.theoretical == -2.0);
  CHECK_THAT(inf.slope, WithinAbs(-2.0, 0.15));
  const DecayFit two = lp_lq_decay_fit(f, 1.0, 2.0, times);
  CHECK_THAT(two.slope, WithinAbs(-1.0, 0.15));

  CHECK_THROWS_AS(lp_lq_decay_fit(f, 2.0, 1.0, times), std::invalid_argument);
  CHECK_THROWS_AS(lp_lq_decay_fit(f, 1.0, 2.0, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(lp_lq_decay_fit(f, 1.0, 2.0, {2.0, 1.0, 30.0}), std::invalid_argument);
}
