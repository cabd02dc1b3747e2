#pragma once

// Heat kernel of the sub-Laplacian on H^n for the group law used in group.hpp:
//
//   h_t(z, tau) = c_n * integral_R (lambda / sinh(t lambda))^n
//                       * exp(-|z|^2 lambda / (4 tanh(t lambda))) * cos(lambda tau / 4) dlambda,
//   c_n = 1 / (8 pi (4 pi)^n).
//
// The integrand is even in lambda, so the rule is folded onto lambda >= 0.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "heisenlab/grid.hpp"
#include "heisenlab/group.hpp"
#include "heisenlab/parallel.hpp"
#include "heisenlab/stencil.hpp"

namespace heisenlab {

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelQuadrature {
  enum class Rule { trapezoid, gauss_legendre };

  /// 0 selects max(30/t, 30).
  double lambda_max = 0.0;
  int lambda_points = 2048;
  Rule rule = Rule::trapezoid;
  /// For the trapezoid rule, double lambda_points until the periodic images
  /// of the kernel in tau lie outside the requested tau range.
  bool guard_aliasing = true;

  double resolved_lambda_max(double t) const {
    return lambda_max > 0.0 ? lambda_max : std::max(30.0 / t, 30.0);
  }
  void validate() const {
    if (lambda_points < 2) throw std::invalid_argument("KernelQuadrature: lambda_points must be >= 2");
    if (lambda_max < 0.0) throw std::invalid_argument("KernelQuadrature: lambda_max must be >= 0");
  }
};

inline double kernel_constant(int n) {
  return 1.0 / (8.0 * std::numbers::pi * std::pow(4.0 * std::numbers::pi, n));
}

namespace detail {

/// Nodes and weights of Gauss-Legendre on [-1, 1], cached per size.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int m) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  std::vector<double> x(m), w(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(m, std::make_pair(std::move(x), std::move(w))).first->second;
}

/// Full symmetric rule on [-lambda_max, lambda_max].
struct LambdaRule {
  std::vector<double> lambda;
  std::vector<double> weight;
};

/// Rule folded onto lambda >= 0 (weights of mirrored nodes merged).
struct FoldedRule {
  std::vector<double> lambda;
  std::vector<double> weight;
  int points = 0;  ///< size of the unfolded rule actually used
};

inline int guarded_points(const KernelQuadrature& q, double t, double max_abs_tau) {
  int P = q.lambda_points;
  if (q.rule != KernelQuadrature::Rule::trapezoid || !q.guard_aliasing) return P;
  const double lmax = q.resolved_lambda_max(t);
  // Image spacing in tau is 4 pi / dlambda; the kernel decays like
  // exp(-pi |tau| / (4t)), so 64 t of clearance is below 1e-20 relative.
  while (4.0 * std::numbers::pi * (P - 1) / (2.0 * lmax) < max_abs_tau + 64.0 * t && P < (1 << 22)) {
    P *= 2;
  }
  return P;
}

inline LambdaRule make_rule(const KernelQuadrature& q, double t, double max_abs_tau) {
  q.validate();
  const double lmax = q.resolved_lambda_max(t);
  const int P = guarded_points(q, t, max_abs_tau);
  LambdaRule r;
  r.lambda.resize(P);
  r.weight.resize(P);
  if (q.rule == KernelQuadrature::Rule::trapezoid) {
    const double d = 2.0 * lmax / (P - 1);
    for (int j = 0; j < P; ++j) {
      r.lambda[j] = -lmax + j * d;
      r.weight[j] = (j == 0 || j == P - 1) ? 0.5 * d : d;
    }
  } else {
    const auto& gl = gauss_legendre(P);
    for (int j = 0; j < P; ++j) {
      r.lambda[j] = lmax * gl.first[j];
      r.weight[j] = lmax * gl.second[j];
    }
  }
  return r;
}

inline FoldedRule fold(const LambdaRule& r) {
  FoldedRule f;
  const int P = static_cast<int>(r.lambda.size());
  f.points = P;
  for (int j = P / 2; j < P; ++j) {
    const int mirror = P - 1 - j;
    if (mirror == j) {
      f.lambda.push_back(std::abs(r.lambda[j]));
      f.weight.push_back(r.weight[j]);
    } else {
      f.lambda.push_back(0.5 * (r.lambda[j] - r.lambda[mirror]));
      f.weight.push_back(r.weight[j] + r.weight[mirror]);
    }
  }
  return f;
}

inline FoldedRule make_folded_rule(const KernelQuadrature& q, double t, double max_abs_tau) {
  return fold(make_rule(q, t, max_abs_tau));
}

/// (lambda/sinh(t lambda))^n exp(-s lambda / (4 tanh(t lambda))), s = |z|^2.
inline double kernel_amplitude(double lambda, double s, double t, int n) {
  const double a = std::abs(lambda);
  const double x = t * a;
  double log_ratio, coth_term;
  if (x < 1e-4) {
    log_ratio = -std::log(t) + std::log1p(-x * x / 6.0);
    coth_term = (1.0 + x * x / 3.0) / t;
  } else {
    const double e = std::exp(-2.0 * x);
    log_ratio = std::log(2.0 * a) - x - std::log1p(-e);
    coth_term = a * (1.0 + e) / (1.0 - e);
  }
  return std::exp(n * log_ratio - 0.25 * s * coth_term);
}

inline void require_positive_time(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument(std::string(what) + ": t must be > 0");
  }
}

}  // namespace detail

/// Quadrature approximation of h_t(eta).
inline double kernel_value(const GroupPoint& eta, double t, const KernelQuadrature& q = {}) {
  detail::require_positive_time(t, "kernel_value");
  const int n = static_cast<int>(eta.dim());
  const double s = eta.z_norm_sq();
  const auto rule = detail::make_rule(q, t, std::abs(eta.tau));
  double re = 0.0, im = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < rule.lambda.size(); ++j) {
    const double l = rule.lambda[j];
    const double wa = rule.weight[j] * detail::kernel_amplitude(l, s, t, n);
    const double ph = 0.25 * l * eta.tau;
    re += wa * std::cos(ph);
    im += wa * std::sin(ph);
    scale += std::abs(wa);
  }
  if (!std::isfinite(re) || std::abs(im) > 1e-10 * scale) {
    throw NumericalFailure("kernel_value: imaginary residual " + std::to_string(im) +
                           " exceeds tolerance");
  }
  return kernel_constant(n) * re;
}

struct SampledKernel {
  GridField field;
  std::size_t clamped_points = 0;
  double most_negative = 0.0;  ///< most negative raw value before clamping
  int lambda_points_used = 0;
};

/// h_t on every point of `spec`. Negative quadrature noise is clamped to 0
/// and counted.
inline SampledKernel sample_kernel(double t, const GridSpec& spec, const KernelQuadrature& q = {}) {
  detail::require_positive_time(t, "sample_kernel");
  spec.validate();
  const int n = spec.n;
  const int N = spec.points_per_xy_axis;
  const int A = spec.xy_axes();
  const int Nt = spec.points_per_tau_axis;
  const double h = spec.h_xy();
  const auto rule = detail::make_folded_rule(q, t, spec.half_width_tau);
  const std::size_t M = rule.lambda.size();

  // Lines sharing |z|^2 share a kernel line; key = sum (2i - (N-1))^2.
  std::map<std::int64_t, std::vector<std::size_t>> by_key;
  std::vector<int> idx(A);
  for (std::size_t l = 0; l < spec.line_count(); ++l) {
    spec.line_indices(l, idx);
    std::int64_t key = 0;
    for (int i : idx) key += static_cast<std::int64_t>(2 * i - (N - 1)) * (2 * i - (N - 1));
    by_key[key].push_back(l);
  }
  std::vector<std::pair<std::int64_t, std::vector<std::size_t>>> groups(by_key.begin(), by_key.end());

  std::vector<double> cos_table(static_cast<std::size_t>(Nt) * M);
  for (int k = 0; k < Nt; ++k) {
    const double tau = spec.tau_coord(k);
    for (std::size_t j = 0; j < M; ++j) cos_table[k * M + j] = std::cos(0.25 * rule.lambda[j] * tau);
  }

  SampledKernel out;
  out.field = GridField(spec);
  out.lambda_points_used = rule.points;
  const double c = kernel_constant(n);
  parallel_for(groups.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> wa(M), line(Nt);
    for (std::size_t g = b; g < e; ++g) {
      const double s = static_cast<double>(groups[g].first) * h * h * 0.25;
      for (std::size_t j = 0; j < M; ++j) {
        wa[j] = rule.weight[j] * detail::kernel_amplitude(rule.lambda[j], s, t, n);
      }
      for (int k = 0; k < Nt; ++k) {
        const double* row = &cos_table[k * M];
        double acc = 0.0;
        for (std::size_t j = 0; j < M; ++j) acc += wa[j] * row[j];
        line[k] = c * acc;
      }
      for (std::size_t l : groups[g].second) {
        auto dst = out.field.line(l);
        std::copy(line.begin(), line.end(), dst.begin());
      }
    }
  });

  for (double& v : out.field.values) {
    if (!std::isfinite(v)) throw NumericalFailure("sample_kernel: non-finite kernel value");
    if (v < 0.0) {
      out.most_negative = std::min(out.most_negative, v);
      ++out.clamped_points;
      v = 0.0;
    }
  }
  return out;
}

struct GaussianEnvelope {
  double c = 0.0;      ///< fitted decay constant in exp(-c |eta|_H^2 / t)
  double lower = 0.0;  ///< min of h_t / (t^{-Q/2} exp(-c |eta|^2/t)) over fitted points
  double upper = 0.0;  ///< max of the same ratio
  std::size_t points = 0;
};

/// Least-squares fit of log h_t against |eta|_H^2 / t over points where the
/// sample exceeds floor_rel times its peak.
inline GaussianEnvelope fit_gaussian_envelope(const GridField& h, double t, double floor_rel = 1e-10) {
  detail::require_positive_time(t, "fit_gaussian_envelope");
  const int Q = homogeneous_dimension(h.spec.n);
  const double peak = h.max_value();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > floor_rel * peak)) continue;
    const double r = koranyi_norm(h.spec.point(i));
    xs.push_back(r * r / t);
    ys.push_back(std::log(h[i]) + 0.5 * Q * std::log(t));
  }
  GaussianEnvelope env;
  env.points = xs.size();
  if (xs.size() < 2) return env;
  const double m = static_cast<double>(xs.size());
  const double mx = pairwise_sum(xs) / m;
  const double my = pairwise_sum(ys) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  env.c = -sxy / sxx;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lr = ys[i] + env.c * xs[i];
    lo = std::min(lo, lr);
    hi = std::max(hi, lr);
  }
  env.lower = std::exp(lo);
  env.upper = std::exp(hi);
  return env;
}

/// Grid L^1 norm of the horizontal gradient |(X_1 f, .., Y_n f)|.
inline double horizontal_gradient_l1(const GridField& f) {
  const auto vf = apply_vector_fields(f);
  std::vector<double> mag(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    double s = 0.0;
    for (int i = 0; i < f.spec.n; ++i) s += vf.X[i][p] * vf.X[i][p] + vf.Y[i][p] * vf.Y[i][p];
    mag[p] = std::sqrt(s);
  }
  return pairwise_sum(mag) * f.spec.cell_volume();
}

}  // namespace heisenlab
