#include <catch2/catch_amalgamated.hpp>

#include "heisenlab/stencil.hpp"

using namespace heisenlab;
using Catch::Matchers::WithinAbs;

namespace {

// Smooth, non-polynomial test field and its sub-Laplacian on H^1.
double probe(double x, double y, double t) {
  return std::sin(0.7 * x + 0.3) * std::cos(0.5 * y) * std::exp(0.2 * t) + 0.3 * x * x * t;
}

double probe_lap(double x, double y, double t) {
  const double S = std::sin(0.7 * x + 0.3), C = std::cos(0.7 * x + 0.3);
  const double cy = std::cos(0.5 * y), sy = std::sin(0.5 * y);
  const double E = std::exp(0.2 * t);
  const double fxx = -0.49 * S * cy * E + 0.6 * t;
  const double fyy = -0.25 * S * cy * E;
  const double ftt = 0.04 * S * cy * E;
  const double fyt = -0.1 * S * sy * E;
  const double fxt = 0.14 * C * cy * E + 0.6 * x;
  return fxx + fyy + 4.0 * (x * x + y * y) * ftt + 4.0 * (x * fyt - y * fxt);
}

double interior_error(const GridSpec& s, const GridField& lap, const std::function<double(const GroupPoint&)>& exact,
                      int margin) {
  double err = 0.0;
  std::vector<int> idx(s.xy_axes());
  for (std::size_t i = 0; i < lap.size(); ++i) {
    s.line_indices(i / s.line_length(), idx);
    const int k = static_cast<int>(i % s.line_length());
    bool inside = k >= margin && k < s.points_per_tau_axis - margin;
    for (int v : idx) inside = inside && v >= margin && v < s.points_per_xy_axis - margin;
    if (inside) err = std::max(err, std::abs(lap[i] - exact(s.point(i))));
  }
  return err;
}

}  // namespace

TEST_CASE("vector fields are exact on quadratics, faces included") {
  const GridSpec s{1, 2.0, 3.0, 9, 11};
  // f = x tau + y^2: X f = tau - 2 y x, Y f = 2 y + 2 x^2, T f = x
  const GridField f = GridField::sample(s, [](const GroupPoint& e) { return e.x[0] * e.tau + e.y[0] * e.y[0]; });
  const VectorFields vf = apply_vector_fields(f);
  double ex = 0.0, ey = 0.0, et = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const GroupPoint e = s.point(i);
    ex = std::max(ex, std::abs(vf.X[0][i] - (e.tau - 2.0 * e.y[0] * e.x[0])));
    ey = std::max(ey, std::abs(vf.Y[0][i] - (2.0 * e.y[0] + 2.0 * e.x[0] * e.x[0])));
    et = std::max(et, std::abs(vf.T[i] - e.x[0]));
  }
  CHECK(ex <= 1e-12);
  CHECK(ey <= 1e-12);
  CHECK(et <= 1e-12);
}

TEST_CASE("sub-Laplacian of simple polynomials") {
  const GridSpec s{2, 1.5, 2.0, 7, 9};
  const GridField r2 = GridField::sample(s, [](const GroupPoint& e) { return e.z_norm_sq(); });
  const GridField lr = sub_laplacian(r2);
  for (double v : lr.values) CHECK_THAT(v, WithinAbs(8.0, 1e-10));  // 4n

  // x_1 tau: 4 (x_1 d_y1 d_tau - y_1 d_x1 d_tau) gives -4 y_1
  const GridField xt = GridField::sample(s, [](const GroupPoint& e) { return e.x[0] * e.tau; });
  const GridField lx = sub_laplacian(xt);
  double err = 0.0;
  for (std::size_t i = 0; i < xt.size(); ++i) err = std::max(err, std::abs(lx[i] + 4.0 * s.point(i).y[0]));
  CHECK(err <= 1e-10);
}

TEST_CASE("second order on a non-polynomial field") {
  auto err = [](int N, int margin) {
    const GridSpec s{1, 2.0, 2.0, N, N};
    const GridField f = GridField::sample(s, [](const GroupPoint& e) { return probe(e.x[0], e.y[0], e.tau); });
    return interior_error(s, sub_laplacian(f),
                          [](const GroupPoint& e) { return probe_lap(e.x[0], e.y[0], e.tau); }, margin);
  };
  const double e1 = err(17, 2), e2 = err(33, 4), e3 = err(65, 8);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e2 / e3 >= 3.7);
  CHECK(e3 <= 5e-3);
}

TEST_CASE("face rules agree away from the faces") {
  const GridSpec s{1, 2.0, 2.0, 21, 21};
  const GridField f = GridField::sample(s, [](const GroupPoint& e) { return probe(e.x[0], e.y[0], e.tau); });
  const GridField a = sub_laplacian(f, FaceRule::one_sided);
  const GridField b = sub_laplacian(f, FaceRule::zero_extension);
  double interior = 0.0, face = 0.0;
  std::vector<int> idx(2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    s.line_indices(i / s.line_length(), idx);
    const int k = static_cast<int>(i % s.line_length());
    const bool far = k >= 2 && k <= 18 && idx[0] >= 2 && idx[0] <= 18 && idx[1] >= 2 && idx[1] <= 18;
    (far ? interior : face) = std::max(far ? interior : face, std::abs(a[i] - b[i]));
  }
  CHECK(interior <= 1e-12);
  CHECK(face > 1e-3);
}

TEST_CASE("sub-Laplacian commutes with left translation") {
  // Delta_H (f o L_z) = (Delta_H f) o L_z, checked against the closed form.
  const GroupPoint z = GroupPoint::h1(0.4, -0.3, 0.5);
  const GridSpec s{1, 1.0, 1.0, 41, 41};
  const GridField f = GridField::sample(s, [&](const GroupPoint& e) {
    const GroupPoint w = group_multiply(z, e);
    return probe(w.x[0], w.y[0], w.tau);
  });
  const double err = interior_error(s, sub_laplacian(f), [&](const GroupPoint& e) {
    const GroupPoint w = group_multiply(z, e);
    return probe_lap(w.x[0], w.y[0], w.tau);
  }, 2);
  CHECK(err <= 2e-3);
}

TEST_CASE("stability bound shrinks with the mesh") {
  const double coarse = fd_stability_bound(GridSpec{1, 4.0, 16.0, 17, 17});
  const double fine = fd_stability_bound(GridSpec{1, 4.0, 16.0, 33, 33});
  CHECK(coarse > 0.0);
  CHECK(fine < coarse / 3.5);
  CHECK_THROWS(sub_laplacian(GridField()));
}
