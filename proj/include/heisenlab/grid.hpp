#pragma once

// Truncated uniform boxes in (x, y, tau) and scalar fields sampled on them.
//
// Linearization: x_1 is the slowest axis, followed by x_2..x_n, y_1..y_n and
// finally tau, which is contiguous in memory. A run of points_per_tau_axis
// values sharing the same (x, y) is called a "line" below.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenlab/group.hpp"

namespace heisenlab {

struct GridSpec {
  int n = 1;
  double half_width_xy = 4.0;
  double half_width_tau = 16.0;
  int points_per_xy_axis = 33;
  int points_per_tau_axis = 33;

  void validate() const {
    if (n < 1) throw std::invalid_argument("GridSpec: n must be >= 1");
    if (!(half_width_xy > 0.0) || !(half_width_tau > 0.0)) {
      throw std::invalid_argument("GridSpec: half widths must be > 0");
    }
    if (points_per_xy_axis < 3 || points_per_tau_axis < 3) {
      throw std::invalid_argument("GridSpec: need at least 3 points per axis");
    }
  }

  /// Box with tau half-width equal to the square of the xy half-width, so the
  /// box is a dilate of the unit box [-1,1]^(2n+1).
  static GridSpec parabolic(int n, double half_width_xy, int points_xy, int points_tau) {
    return GridSpec{n, half_width_xy, half_width_xy * half_width_xy, points_xy, points_tau};
  }

  double h_xy() const { return 2.0 * half_width_xy / (points_per_xy_axis - 1); }
  double h_tau() const { return 2.0 * half_width_tau / (points_per_tau_axis - 1); }
  int xy_axes() const { return 2 * n; }

  std::size_t line_count() const {
    std::size_t c = 1;
    for (int a = 0; a < xy_axes(); ++a) c *= static_cast<std::size_t>(points_per_xy_axis);
    return c;
  }
  std::size_t line_length() const { return static_cast<std::size_t>(points_per_tau_axis); }
  std::size_t total_points() const { return line_count() * line_length(); }

  double cell_volume() const { return std::pow(h_xy(), xy_axes()) * h_tau(); }

  double xy_coord(int i) const { return -half_width_xy + i * h_xy(); }
  double tau_coord(int k) const { return -half_width_tau + k * h_tau(); }

  /// Per-axis indices of a line, ordered x_1..x_n, y_1..y_n.
  void line_indices(std::size_t line, std::span<int> out) const {
    for (int a = xy_axes() - 1; a >= 0; --a) {
      out[a] = static_cast<int>(line % points_per_xy_axis);
      line /= points_per_xy_axis;
    }
  }
  std::size_t line_of(std::span<const int> idx) const {
    std::size_t line = 0;
    for (int a = 0; a < xy_axes(); ++a) line = line * points_per_xy_axis + idx[a];
    return line;
  }
  /// Stride, in points, of a unit step along xy axis `a`.
  std::size_t xy_stride(int a) const {
    std::size_t s = line_length();
    for (int b = xy_axes() - 1; b > a; --b) s *= points_per_xy_axis;
    return s;
  }

  GroupPoint point(std::size_t linear) const {
    const std::size_t line = linear / line_length();
    const int k = static_cast<int>(linear % line_length());
    std::vector<int> idx(xy_axes());
    line_indices(line, idx);
    GroupPoint p = GroupPoint::identity(n);
    for (int i = 0; i < n; ++i) {
      p.x[i] = xy_coord(idx[i]);
      p.y[i] = xy_coord(idx[n + i]);
    }
    p.tau = tau_coord(k);
    return p;
  }

  bool operator==(const GridSpec&) const = default;
};

/// Summation over a contiguous range by a fixed pairwise tree, so results do
/// not depend on how callers chunk the work.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

template <class F>
double pairwise_sum_of(std::size_t count, F&& term) {
  std::vector<double> tmp(count);
  for (std::size_t i = 0; i < count; ++i) tmp[i] = term(i);
  return pairwise_sum(tmp);
}

struct GridField {
  GridSpec spec;
  std::vector<double> values;
  /// Set when a solver stopped because values exceeded its blow-up threshold.
  bool overflowed = false;

  GridField() = default;
  explicit GridField(const GridSpec& s, double fill = 0.0) : spec(s) {
    spec.validate();
    values.assign(spec.total_points(), fill);
  }
  GridField(const GridSpec& s, std::vector<double> v) : spec(s), values(std::move(v)) {
    spec.validate();
    if (values.size() != spec.total_points()) {
      throw std::invalid_argument("GridField: value count does not match spec");
    }
  }

  template <class F>
  static GridField sample(const GridSpec& s, F&& f) {
    GridField g(s);
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = f(s.point(i));
    return g;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  std::span<double> line(std::size_t l) {
    return std::span<double>(values).subspan(l * spec.line_length(), spec.line_length());
  }
  std::span<const double> line(std::size_t l) const {
    return std::span<const double>(values).subspan(l * spec.line_length(), spec.line_length());
  }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
  double max_value() const { return *std::max_element(values.begin(), values.end()); }
  double min_value() const { return *std::min_element(values.begin(), values.end()); }
  double sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  GridField& operator+=(const GridField& o) {
    require_same_spec(o);
    for (std::size_t i = 0; i < size(); ++i) values[i] += o.values[i];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    require_same_spec(o);
    for (std::size_t i = 0; i < size(); ++i) values[i] -= o.values[i];
    return *this;
  }
  GridField& operator*=(double a) {
    for (double& v : values) v *= a;
    return *this;
  }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator*(double s, GridField a) { return a *= s; }

  void require_same_spec(const GridField& o) const {
    if (!(spec == o.spec)) throw std::invalid_argument("GridField: spec mismatch");
  }
};

/// Riemann sum with the cell volume as measure.
inline double grid_integral(const GridField& f) {
  return pairwise_sum(f.values) * f.spec.cell_volume();
}

/// Tensor trapezoid rule over the box.
inline double trapezoid_integral(const GridField& f) {
  const GridSpec& s = f.spec;
  const int nxy = s.points_per_xy_axis;
  const int ntau = s.points_per_tau_axis;
  std::vector<int> idx(s.xy_axes());
  std::vector<double> line_sums(s.line_count());
  for (std::size_t l = 0; l < s.line_count(); ++l) {
    s.line_indices(l, idx);
    double w = 1.0;
    for (int i : idx) w *= (i == 0 || i == nxy - 1) ? 0.5 : 1.0;
    auto ln = f.line(l);
    std::vector<double> tmp(ln.begin(), ln.end());
    tmp.front() *= 0.5;
    tmp.back() *= 0.5;
    line_sums[l] = w * pairwise_sum(tmp);
  }
  (void)ntau;
  return pairwise_sum(line_sums) * s.cell_volume();
}

/// (sum |f|^p dV)^(1/p); p = infinity gives the max norm.
inline double lp_norm(const GridField& f, double p) {
  if (std::isinf(p)) return f.sup_norm();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const double s = pairwise_sum_of(f.size(), [&](std::size_t i) {
    return std::pow(std::abs(f.values[i]), p);
  });
  return std::pow(s * f.spec.cell_volume(), 1.0 / p);
}

// ---------------------------------------------------------------------------
// Binary dump:
//   "HHGF1" (5 bytes)
//   n, points_per_xy_axis, points_per_tau_axis     as uint64 little-endian
//   half_width_xy, half_width_tau                  as float64 little-endian
//   values in linearization order                  as float64 little-endian

namespace detail {
inline constexpr char kMagic[5] = {'H', 'H', 'G', 'F', '1'};

template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

template <class T>
T read_le(std::istream& is) {
  static_assert(sizeof(T) == 8);
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw std::runtime_error("GridField dump: truncated input");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  return std::bit_cast<T>(bits);
}
}  // namespace detail

inline void write_field(std::ostream& os, const GridField& f) {
  os.write(detail::kMagic, 5);
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.spec.n));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.spec.points_per_xy_axis));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(f.spec.points_per_tau_axis));
  detail::write_le<double>(os, f.spec.half_width_xy);
  detail::write_le<double>(os, f.spec.half_width_tau);
  for (double v : f.values) detail::write_le<double>(os, v);
}

inline GridField read_field(std::istream& is) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, detail::kMagic, 5) != 0) {
    throw std::runtime_error("GridField dump: bad magic (expected HHGF1)");
  }
  GridSpec s;
  s.n = static_cast<int>(detail::read_le<std::uint64_t>(is));
  s.points_per_xy_axis = static_cast<int>(detail::read_le<std::uint64_t>(is));
  s.points_per_tau_axis = static_cast<int>(detail::read_le<std::uint64_t>(is));
  s.half_width_xy = detail::read_le<double>(is);
  s.half_width_tau = detail::read_le<double>(is);
  s.validate();
  std::vector<double> v(s.total_points());
  for (double& x : v) x = detail::read_le<double>(is);
  return GridField(s, std::move(v));
}

inline void save_field(const std::string& path, const GridField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_field(os, f);
}

inline GridField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_field(is);
}

}  // namespace heisenlab
