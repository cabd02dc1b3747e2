#pragma once

// Heisenberg group H^n = R^n x R^n x R with the law
//   (x,y,t) o (x',y',t') = (x+x', y+y', t+t' + 2(x.y' - x'.y)).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace heisenlab {

/// A point eta = (x, y, tau) of H^n.
struct GroupPoint {
  std::vector<double> x;
  std::vector<double> y;
  double tau = 0.0;

  GroupPoint() = default;
  GroupPoint(std::vector<double> x_, std::vector<double> y_, double tau_)
      : x(std::move(x_)), y(std::move(y_)), tau(tau_) {
    if (x.size() != y.size() || x.empty()) {
      throw std::invalid_argument("GroupPoint: x and y must share a length n >= 1");
    }
  }

  static GroupPoint identity(std::size_t n) {
    return GroupPoint(std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0);
  }

  /// Convenience constructor for H^1.
  static GroupPoint h1(double x, double y, double tau) { return GroupPoint({x}, {y}, tau); }

  std::size_t dim() const { return x.size(); }

  /// |x|^2 + |y|^2
  double z_norm_sq() const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i] + y[i] * y[i];
    return s;
  }

  bool operator==(const GroupPoint&) const = default;
};

namespace detail {
inline void require_same_dim(const GroupPoint& a, const GroupPoint& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}
}  // namespace detail

inline GroupPoint group_multiply(const GroupPoint& a, const GroupPoint& b) {
  detail::require_same_dim(a, b, "group_multiply");
  const std::size_t n = a.dim();
  GroupPoint r = GroupPoint::identity(n);
  double symp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.x[i] = a.x[i] + b.x[i];
    r.y[i] = a.y[i] + b.y[i];
    symp += a.x[i] * b.y[i] - b.x[i] * a.y[i];
  }
  r.tau = a.tau + b.tau + 2.0 * symp;
  return r;
}

inline GroupPoint group_inverse(const GroupPoint& a) {
  GroupPoint r = a;
  for (auto& v : r.x) v = -v;
  for (auto& v : r.y) v = -v;
  r.tau = -r.tau;
  return r;
}

/// Parabolic dilation (lambda x, lambda y, lambda^2 tau).
inline GroupPoint dilate(const GroupPoint& a, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("dilate: lambda must be > 0");
  GroupPoint r = a;
  for (auto& v : r.x) v *= lambda;
  for (auto& v : r.y) v *= lambda;
  r.tau *= lambda * lambda;
  return r;
}

/// Koranyi norm ((|x|^2+|y|^2)^2 + tau^2)^(1/4).
inline double koranyi_norm(const GroupPoint& a) {
  const double s = a.z_norm_sq();
  return std::sqrt(std::sqrt(s * s + a.tau * a.tau));
}

/// d_H(eta, xi) = |xi^{-1} o eta|_H
inline double koranyi_distance(const GroupPoint& eta, const GroupPoint& xi) {
  return koranyi_norm(group_multiply(group_inverse(xi), eta));
}

/// Homogeneous dimension Q = 2n + 2.
constexpr int homogeneous_dimension(int n) { return 2 * n + 2; }

}  // namespace heisenlab
