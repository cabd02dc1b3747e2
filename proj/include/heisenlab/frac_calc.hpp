#pragma once

// Riemann-Liouville operators on uniform time grids by product integration.
//
// Integrals use the endpoint of each cell farthest from the evaluation time;
// derivatives d/dt I^{1-a} use the nearest endpoint in the inner sum followed
// by central differencing.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenlab/grid.hpp"
#include "heisenlab/parallel.hpp"

namespace heisenlab {

/// c[m] = integral over one cell of (m dt - s)^(order-1), m >= 1, so that
/// sum_{m=1..k} c[m] = (k dt)^order / order.
inline std::vector<double> abel_weights(double order, double dt, int steps) {
  if (!(order > 0.0) || !(dt > 0.0) || steps < 0) {
    throw std::invalid_argument("abel_weights: need order > 0, dt > 0, steps >= 0");
  }
  std::vector<double> c(static_cast<std::size_t>(steps) + 1, 0.0);
  const double scale = std::pow(dt, order) / order;
  for (int m = 1; m <= steps; ++m) {
    // m^a - (m-1)^a without cancellation
    const double diff = m == 1 ? 1.0 : -std::pow(double(m), order) * std::expm1(order * std::log1p(-1.0 / m));
    c[m] = scale * diff;
  }
  return c;
}

struct FracScheme {
  double gamma = 0.5;
  double alpha = 0.5;  ///< 1 - gamma
  double time_step = 0.01;
  int steps = 1;
  /// weights[m] = w_{k,k-m} = [(m dt)^(1-gamma) - ((m-1) dt)^(1-gamma)] / (1-gamma)
  std::vector<double> weights;

  FracScheme() = default;
  FracScheme(double gamma_, double time_step_, int steps_)
      : gamma(gamma_), alpha(1.0 - gamma_), time_step(time_step_), steps(steps_) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("FracScheme: gamma must be in [0,1)");
    if (!(time_step > 0.0)) throw std::invalid_argument("FracScheme: time_step must be > 0");
    if (steps < 1) throw std::invalid_argument("FracScheme: steps must be >= 1");
    weights = abel_weights(alpha, time_step, steps);
  }

  /// w_{k,j} for 0 <= j < k.
  double weight(int k, int j) const { return weights.at(static_cast<std::size_t>(k - j)); }
  double time(int k) const { return k * time_step; }
};

struct TimeSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  TimeSeries() = default;
  TimeSeries(double t0_, double dt_, std::vector<double> v) : t0(t0_), dt(dt_), values(std::move(v)) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeSeries: dt must be > 0");
  }

  template <class F>
  static TimeSeries sample(double t0, double t1, int steps, F&& f) {
    if (steps < 1 || !(t1 > t0)) throw std::invalid_argument("TimeSeries::sample: bad range");
    const double dt = (t1 - t0) / steps;
    std::vector<double> v(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) v[k] = f(t0 + k * dt);
    return TimeSeries(t0, dt, std::move(v));
  }

  int steps() const { return static_cast<int>(values.size()) - 1; }
  double time(int k) const { return t0 + k * dt; }
  double end() const { return time(steps()); }
  double operator[](std::size_t k) const { return values[k]; }
};

namespace detail {
inline void require_order(double order, const char* what) {
  if (!(order > 0.0 && order < 1.0)) {
    throw std::invalid_argument(std::string(what) + ": order must be in (0,1)");
  }
}
inline void require_series(const TimeSeries& f, const char* what) {
  if (f.values.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least 2 nodes");
}

/// Central differences inside, second-order one-sided at both ends.
inline std::vector<double> differentiate(const std::vector<double>& v, double dt) {
  const std::size_t N = v.size();
  std::vector<double> d(N);
  if (N == 2) {
    d[0] = d[1] = (v[1] - v[0]) / dt;
    return d;
  }
  for (std::size_t k = 1; k + 1 < N; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * dt);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  d[N - 1] = (3.0 * v[N - 1] - 4.0 * v[N - 2] + v[N - 3]) / (2.0 * dt);
  return d;
}

enum class Endpoint { far, near };

/// Left RL integral (without 1/Gamma) at every node.
inline std::vector<double> left_sum(const TimeSeries& f, double order, Endpoint ep) {
  const int K = f.steps();
  const auto c = abel_weights(order, f.dt, K);
  std::vector<double> out(K + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += c[k - j] * f.values[ep == Endpoint::far ? j : j + 1];
    out[k] = acc;
  }
  return out;
}

/// Right RL integral (without 1/Gamma) at every node.
inline std::vector<double> right_sum(const TimeSeries& f, double order, Endpoint ep) {
  const int K = f.steps();
  const auto c = abel_weights(order, f.dt, K);
  std::vector<double> out(K + 1, 0.0);
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int j = k + 1; j <= K; ++j) acc += c[j - k] * f.values[ep == Endpoint::far ? j : j - 1];
    out[k] = acc;
  }
  return out;
}
}  // namespace detail

/// I^a_{t0|t} f at every node; value 0 at the first node.
inline TimeSeries rl_integral_left(const TimeSeries& f, double order) {
  detail::require_order(order, "rl_integral_left");
  detail::require_series(f, "rl_integral_left");
  auto v = detail::left_sum(f, order, detail::Endpoint::far);
  const double g = std::tgamma(order);
  for (double& x : v) x /= g;
  return TimeSeries(f.t0, f.dt, std::move(v));
}

/// I^a_{t|T} f at every node, T the last node; value 0 at the last node.
inline TimeSeries rl_integral_right(const TimeSeries& f, double order) {
  detail::require_order(order, "rl_integral_right");
  detail::require_series(f, "rl_integral_right");
  auto v = detail::right_sum(f, order, detail::Endpoint::far);
  const double g = std::tgamma(order);
  for (double& x : v) x /= g;
  return TimeSeries(f.t0, f.dt, std::move(v));
}

/// D^a_{t0|t} f = d/dt I^{1-a}_{t0|t} f.
inline TimeSeries rl_derivative_left(const TimeSeries& f, double order) {
  detail::require_order(order, "rl_derivative_left");
  detail::require_series(f, "rl_derivative_left");
  const double b = 1.0 - order;
  auto inner = detail::left_sum(f, b, detail::Endpoint::near);
  auto d = detail::differentiate(inner, f.dt);
  const double g = std::tgamma(b);
  for (double& x : d) x /= g;
  return TimeSeries(f.t0, f.dt, std::move(d));
}

/// D^a_{t|T} f = -d/dt I^{1-a}_{t|T} f, T the last node.
inline TimeSeries rl_derivative_right(const TimeSeries& f, double order) {
  detail::require_order(order, "rl_derivative_right");
  detail::require_series(f, "rl_derivative_right");
  const double b = 1.0 - order;
  auto inner = detail::right_sum(f, b, detail::Endpoint::near);
  auto d = detail::differentiate(inner, f.dt);
  const double g = std::tgamma(b);
  for (double& x : d) x = -x / g;
  return TimeSeries(f.t0, f.dt, std::move(d));
}

enum class W1Order { alpha, one_plus_alpha };

/// Exact right derivatives of w_1(t) = (1 - t/T)^sigma:
///   order a:     Gamma(s+1)/Gamma(s+1-a) T^{-a} (1-t/T)^{s-a}
///   order 1+a:   Gamma(s+1)/Gamma(s-a) T^{-(1+a)} (1-t/T)^{s-a-1}
inline double w1_exact(double t, double T, double sigma, double alpha, W1Order kind) {
  if (!(T > 0.0)) throw std::invalid_argument("w1_exact: T must be > 0");
  if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("w1_exact: t must lie in [0,T]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("w1_exact: alpha must be in (0,1)");
  const double r = 1.0 - t / T;
  if (kind == W1Order::alpha) {
    if (!(sigma > alpha)) throw std::invalid_argument("w1_exact: need sigma > alpha");
    return std::exp(std::lgamma(sigma + 1.0) - std::lgamma(sigma + 1.0 - alpha)) *
           std::pow(T, -alpha) * std::pow(r, sigma - alpha);
  }
  if (!(sigma > alpha + 1.0)) throw std::invalid_argument("w1_exact: need sigma > alpha + 1");
  return std::exp(std::lgamma(sigma + 1.0) - std::lgamma(sigma - alpha)) *
         std::pow(T, -(1.0 + alpha)) * std::pow(r, sigma - alpha - 1.0);
}

/// Trapezoid rule over all nodes.
inline double trapezoid(const std::vector<double>& v, double dt) {
  if (v.size() < 2) return 0.0;
  std::vector<double> w(v);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return pairwise_sum(w) * dt;
}

struct IbpDefect {
  double lhs = 0.0;  ///< integral of f * D^a_{c|t} g
  double rhs = 0.0;  ///< integral of g * D^a_{t|d} f
  double defect = 0.0;
  double scale = 1.0;  ///< max(1, |lhs|, |rhs|)
};

inline IbpDefect integration_by_parts(const TimeSeries& f, const TimeSeries& g, double order) {
  if (f.values.size() != g.values.size() || f.dt != g.dt || f.t0 != g.t0) {
    throw std::invalid_argument("integration_by_parts_defect: series must share a grid");
  }
  const auto dg = rl_derivative_left(g, order);
  const auto df = rl_derivative_right(f, order);
  std::vector<double> a(f.values.size()), b(f.values.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = f.values[k] * dg.values[k];
    b[k] = g.values[k] * df.values[k];
  }
  IbpDefect r;
  r.lhs = trapezoid(a, f.dt);
  r.rhs = trapezoid(b, f.dt);
  r.defect = std::abs(r.lhs - r.rhs);
  r.scale = std::max({1.0, std::abs(r.lhs), std::abs(r.rhs)});
  return r;
}

/// |int f D^a_{c|t} g dt - int g D^a_{t|d} f dt|
inline double integration_by_parts_defect(const TimeSeries& f, const TimeSeries& g, double order) {
  return integration_by_parts(f, g, order).defect;
}

/// sum_{j<k} w_{k,j} u_power[j]
inline GridField memory_term(const std::vector<GridField>& u_power, const FracScheme& scheme, int k) {
  if (k < 0 || k > scheme.steps) throw std::invalid_argument("memory_term: node index out of range");
  if (u_power.empty()) throw std::invalid_argument("memory_term: empty history");
  if (static_cast<int>(u_power.size()) < k) {
    throw std::invalid_argument("memory_term: history shorter than k");
  }
  GridField out(u_power.front().spec);
  for (int j = 0; j < k; ++j) u_power[0].require_same_spec(u_power[j]);
  if (k == 0) return out;
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (int j = 0; j < k; ++j) {
      const double w = scheme.weight(k, j);
      const double* src = u_power[j].values.data();
      for (std::size_t i = b; i < e; ++i) out.values[i] += w * src[i];
    }
  });
  return out;
}

/// Scalar counterpart of memory_term.
inline double memory_term(const std::vector<double>& series, const FracScheme& scheme, int k) {
  if (k < 0 || k > scheme.steps || static_cast<int>(series.size()) < k) {
    throw std::invalid_argument("memory_term: node index out of range");
  }
  double acc = 0.0;
  for (int j = 0; j < k; ++j) acc += scheme.weight(k, j) * series[j];
  return acc;
}

/// Incremental memory term for time stepping. Stores the full history when
/// gamma > 0; for gamma = 0 all weights equal dt and a running sum suffices.
class MemoryHistory {
 public:
  explicit MemoryHistory(const FracScheme& scheme) : scheme_(scheme) {}

  void push(GridField u_power) {
    if (scheme_.gamma == 0.0) {
      if (running_.size() == 0) running_ = GridField(u_power.spec);
      running_ += u_power;
      ++count_;
    } else {
      history_.push_back(std::move(u_power));
      count_ = static_cast<int>(history_.size());
    }
  }

  /// Memory term at node k = number of pushed entries.
  GridField term() const {
    if (count_ == 0) throw std::logic_error("MemoryHistory: no entries");
    if (scheme_.gamma == 0.0) return scheme_.time_step * GridField(running_);
    return memory_term(history_, scheme_, count_);
  }

  int size() const { return count_; }
  std::size_t stored_fields() const { return history_.size(); }

 private:
  FracScheme scheme_;
  std::vector<GridField> history_;
  GridField running_;
  int count_ = 0;
};

}  // namespace heisenlab
