#pragma once

// Finite-difference realizations of X_i = d/dx_i - 2 y_i d/dtau,
// Y_i = d/dy_i + 2 x_i d/dtau, T = d/dtau and of the sub-Laplacian
//   Delta_H = Delta_x + Delta_y + 4|z|^2 d2/dtau2 + 4 sum_i (x_i d2/dy_i dtau - y_i d2/dx_i dtau).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "heisenlab/grid.hpp"

namespace heisenlab {

enum class FaceRule {
  one_sided,       ///< second-order one-sided differences at box faces
  zero_extension,  ///< central everywhere, with zero values outside the box
};

struct VectorFields {
  std::vector<GridField> X;  ///< X_1..X_n
  std::vector<GridField> Y;  ///< Y_1..Y_n
  GridField T;
};

namespace detail {

struct AxisView {
  std::size_t stride;
  int count;
  double h;
};

inline AxisView axis_view(const GridSpec& s, int axis) {
  if (axis == s.xy_axes()) return {1, s.points_per_tau_axis, s.h_tau()};
  return {s.xy_stride(axis), s.points_per_xy_axis, s.h_xy()};
}

inline void require_resolvable(const GridSpec& s) {
  if (s.points_per_xy_axis < 3 || s.points_per_tau_axis < 3) {
    throw std::invalid_argument("stencil: need at least 3 points per axis");
  }
}

/// First derivative along `axis` (0..2n-1 are x_1..x_n, y_1..y_n; 2n is tau).
inline std::vector<double> d1(const std::vector<double>& f, const GridSpec& s, int axis,
                              FaceRule rule) {
  const AxisView a = axis_view(s, axis);
  const std::size_t N = f.size();
  std::vector<double> out(N);
  const double inv2h = 0.5 / a.h;
  const std::size_t st = a.stride;
  for (std::size_t p = 0; p < N; ++p) {
    const int i = static_cast<int>((p / st) % a.count);
    if (i > 0 && i < a.count - 1) {
      out[p] = (f[p + st] - f[p - st]) * inv2h;
    } else if (rule == FaceRule::zero_extension) {
      out[p] = (i == 0 ? f[p + st] : -f[p - st]) * inv2h;
    } else if (i == 0) {
      out[p] = (-3.0 * f[p] + 4.0 * f[p + st] - f[p + 2 * st]) * inv2h;
    } else {
      out[p] = (3.0 * f[p] - 4.0 * f[p - st] + f[p - 2 * st]) * inv2h;
    }
  }
  return out;
}

/// Second derivative along `axis`, accumulated as out += coef(p) * d2f.
template <class Coef>
void add_d2(std::vector<double>& out, const std::vector<double>& f, const GridSpec& s, int axis,
            FaceRule rule, Coef&& coef) {
  const AxisView a = axis_view(s, axis);
  const std::size_t N = f.size();
  const double invh2 = 1.0 / (a.h * a.h);
  const std::size_t st = a.stride;
  const bool four = a.count >= 4;
  for (std::size_t p = 0; p < N; ++p) {
    const int i = static_cast<int>((p / st) % a.count);
    double v;
    if (i > 0 && i < a.count - 1) {
      v = f[p + st] - 2.0 * f[p] + f[p - st];
    } else if (rule == FaceRule::zero_extension) {
      v = (i == 0 ? f[p + st] : f[p - st]) - 2.0 * f[p];
    } else if (i == 0) {
      v = four ? 2.0 * f[p] - 5.0 * f[p + st] + 4.0 * f[p + 2 * st] - f[p + 3 * st]
               : f[p] - 2.0 * f[p + st] + f[p + 2 * st];
    } else {
      v = four ? 2.0 * f[p] - 5.0 * f[p - st] + 4.0 * f[p - 2 * st] - f[p - 3 * st]
               : f[p] - 2.0 * f[p - st] + f[p - 2 * st];
    }
    out[p] += coef(p) * v * invh2;
  }
}

/// xy coordinates of every line, laid out as coords[line * 2n + axis].
inline std::vector<double> line_coordinates(const GridSpec& s) {
  const int A = s.xy_axes();
  std::vector<double> c(s.line_count() * A);
  std::vector<int> idx(A);
  for (std::size_t l = 0; l < s.line_count(); ++l) {
    s.line_indices(l, idx);
    for (int a = 0; a < A; ++a) c[l * A + a] = s.xy_coord(idx[a]);
  }
  return c;
}

}  // namespace detail

inline VectorFields apply_vector_fields(const GridField& f,
                                        FaceRule rule = FaceRule::one_sided) {
  const GridSpec& s = f.spec;
  detail::require_resolvable(s);
  const int n = s.n;
  const int A = s.xy_axes();
  const std::size_t L = s.line_length();
  const auto coords = detail::line_coordinates(s);

  VectorFields out;
  out.T = GridField(s, detail::d1(f.values, s, A, rule));
  for (int i = 0; i < n; ++i) {
    GridField X(s, detail::d1(f.values, s, i, rule));
    GridField Y(s, detail::d1(f.values, s, n + i, rule));
    for (std::size_t p = 0; p < f.size(); ++p) {
      const std::size_t l = p / L;
      X[p] -= 2.0 * coords[l * A + n + i] * out.T[p];
      Y[p] += 2.0 * coords[l * A + i] * out.T[p];
    }
    out.X.push_back(std::move(X));
    out.Y.push_back(std::move(Y));
  }
  return out;
}

inline GridField sub_laplacian(const GridField& f, FaceRule rule = FaceRule::one_sided) {
  const GridSpec& s = f.spec;
  detail::require_resolvable(s);
  const int n = s.n;
  const int A = s.xy_axes();
  const std::size_t L = s.line_length();
  const auto coords = detail::line_coordinates(s);

  std::vector<double> out(f.size(), 0.0);
  auto one = [](std::size_t) { return 1.0; };
  for (int a = 0; a < A; ++a) detail::add_d2(out, f.values, s, a, rule, one);

  std::vector<double> r2(s.line_count(), 0.0);
  for (std::size_t l = 0; l < s.line_count(); ++l) {
    for (int a = 0; a < A; ++a) r2[l] += coords[l * A + a] * coords[l * A + a];
  }
  detail::add_d2(out, f.values, s, A, rule, [&](std::size_t p) { return 4.0 * r2[p / L]; });

  const auto ft = detail::d1(f.values, s, A, rule);
  for (int i = 0; i < n; ++i) {
    const auto fyt = detail::d1(ft, s, n + i, rule);
    const auto fxt = detail::d1(ft, s, i, rule);
    for (std::size_t p = 0; p < out.size(); ++p) {
      const std::size_t l = p / L;
      out[p] += 4.0 * (coords[l * A + i] * fyt[p] - coords[l * A + n + i] * fxt[p]);
    }
  }
  return GridField(s, std::move(out));
}

/// Largest explicit Euler step accepted for u += dt * Delta_H u on this box:
/// 0.9 / (4n/h_xy^2 + 8 max|z|^2/h_tau^2 + 4n max(|x|,|y|)/(h_xy h_tau)).
inline double fd_stability_bound(const GridSpec& s) {
  s.validate();
  const double hxy = s.h_xy();
  const double ht = s.h_tau();
  const double L = s.half_width_xy;
  const double max_r2 = s.xy_axes() * L * L;
  const double denom = 4.0 * s.n / (hxy * hxy) + 8.0 * max_r2 / (ht * ht) +
                       4.0 * s.n * L / (hxy * ht);
  if (!std::isfinite(denom) || !(denom > 0.0)) {
    throw std::invalid_argument("fd_stability_bound: degenerate grid");
  }
  return 0.9 / denom;
}

}  // namespace heisenlab
