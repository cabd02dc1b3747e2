#pragma once

// Time stepping of
//   u_t - Delta_H u = int_0^t (t-s)^{-gamma} |u|^{p-1} u(s) ds,   u(0) = u_0,
// in mild form, one Lie splitting step at a time:
//   u^{k+1} = S(dt) (u^k + dt F^k),   F^k = sum_{j<k} w_{k,j} |u^j|^{p-1} u^j.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenlab/cutoff.hpp"
#include "heisenlab/frac_calc.hpp"
#include "heisenlab/grid.hpp"
#include "heisenlab/group.hpp"
#include "heisenlab/semigroup.hpp"

namespace heisenlab {

struct InitialData {
  enum class Profile { koranyi_gaussian, plateau, power_decay, file, zero };
  Profile profile = Profile::koranyi_gaussian;
  double amplitude = 1.0;
  double kappa = 1.0;  ///< power_decay exponent
  std::string path;    ///< GridField dump for Profile::file
};

inline const char* profile_name(InitialData::Profile p) {
  switch (p) {
    case InitialData::Profile::koranyi_gaussian: return "koranyi_gaussian";
    case InitialData::Profile::plateau: return "plateau";
    case InitialData::Profile::power_decay: return "power_decay";
    case InitialData::Profile::file: return "file";
    case InitialData::Profile::zero: return "zero";
  }
  return "?";
}

inline InitialData::Profile parse_profile(const std::string& s) {
  if (s == "koranyi_gaussian") return InitialData::Profile::koranyi_gaussian;
  if (s == "plateau") return InitialData::Profile::plateau;
  if (s == "power_decay") return InitialData::Profile::power_decay;
  if (s == "file") return InitialData::Profile::file;
  if (s == "zero") return InitialData::Profile::zero;
  throw std::invalid_argument("unknown initial profile '" + s + "'");
}

struct Monitors {
  bool positivity = true;
  bool local_window = true;
  bool moment_inequality = true;
};

struct SolveConfig {
  double p = 1.5;
  double gamma = 0.5;
  GridSpec grid{1, 8.0, 40.0, 48, 48};
  InitialData initial{};
  double time_step = 0.05;
  double t_end = 10.0;
  double blowup_threshold = 1e6;
  SemigroupBackend backend = SemigroupBackend::fd();
  Monitors monitors{};
  /// Exponent of the extra L^q norm recorded in the trace.
  double q_norm = 2.0;
  /// Drops the memory nonlinearity (pure heat flow diagnostic).
  bool disable_nonlinearity = false;
  /// Upper bound for the stored history, steps * points * 8 bytes.
  std::uint64_t memory_cap_bytes = std::uint64_t{2} << 30;
  /// Theta for the moment monitor: c exp(-eps sqrt(A + |z|^4 + tau^2)); eps <= 0 selects 1/(2Q+4).
  double theta_A = 1.0;
  double theta_eps = 0.0;
  /// Relative tolerance for the positivity verdict (fraction of ||u0||_inf).
  double positivity_tolerance = 1e-3;
  std::vector<double> snapshot_times;
  /// Called after every accepted step with (k, t_k, u^k), k = 0 included.
  std::function<void(int, double, const GridField&)> observer;

  int n() const { return grid.n; }
  int steps() const { return static_cast<int>(std::ceil(t_end / time_step - 1e-9)); }
};

inline double profile_value(const InitialData& d, const GroupPoint& eta) {
  const double r = koranyi_norm(eta);
  switch (d.profile) {
    case InitialData::Profile::koranyi_gaussian: return d.amplitude * std::exp(-r * r);
    case InitialData::Profile::plateau: return d.amplitude * smooth_transition(0.5 * r);
    case InitialData::Profile::power_decay: return d.amplitude * std::pow(1.0 + r, -d.kappa);
    case InitialData::Profile::zero: return 0.0;
    case InitialData::Profile::file: break;
  }
  throw std::invalid_argument("profile_value: file profile has no closed form");
}

inline GridField initial_field(const SolveConfig& c) {
  if (c.initial.profile == InitialData::Profile::file) {
    GridField f = load_field(c.initial.path);
    if (!(f.spec == c.grid)) throw std::invalid_argument("initial data file does not match the grid");
    f *= c.initial.amplitude;
    return f;
  }
  return GridField::sample(c.grid, [&](const GroupPoint& e) { return profile_value(c.initial, e); });
}

/// Largest T with T^{2-gamma} 2^p ||u0||^{p-1} / ((1-gamma)(2-gamma)) <= 1.
inline double local_window(double p, double gamma, double u0_sup) {
  if (!(u0_sup > 0.0)) return std::numeric_limits<double>::infinity();
  const double base = (1.0 - gamma) * (2.0 - gamma) / (std::pow(2.0, p) * std::pow(u0_sup, p - 1.0));
  return std::pow(base, 1.0 / (2.0 - gamma));
}

inline double local_window(const SolveConfig& c) {
  return local_window(c.p, c.gamma, initial_field(c).sup_norm());
}

/// c exp(-eps sqrt(A + |z|^4 + tau^2)) with c fixing the grid integral to 1.
inline GridField theta_field(const GridSpec& spec, double A, double eps) {
  if (!(A > 0.0) || !(eps > 0.0)) throw std::invalid_argument("theta_field: need A > 0 and eps > 0");
  GridField th = GridField::sample(spec, [&](const GroupPoint& e) {
    const double s = e.z_norm_sq();
    return std::exp(-eps * std::sqrt(A + s * s + e.tau * e.tau));
  });
  th *= 1.0 / grid_integral(th);
  return th;
}

inline double default_theta_eps(int n) { return 1.0 / (2.0 * homogeneous_dimension(n) + 4.0); }

struct SolveResult {
  enum class Status { completed, blowup_detected, instability_aborted };
  Status status = Status::completed;
  double t_est = std::numeric_limits<double>::quiet_NaN();
  double window = std::numeric_limits<double>::infinity();
  double u0_sup = 0.0;
  std::string message;

  std::vector<double> times;
  std::vector<double> sup_norms;
  std::vector<double> l1_norms;
  std::vector<double> l2_norms;
  std::vector<double> lq_norms;
  std::vector<double> min_values;
  std::vector<double> moment_f;
  /// f'(t_k) + f(t_k) - sum_{j<k} w_{k,j} f(t_j)^p; NaN where undefined.
  std::vector<double> moment_residual;

  bool positivity_ok = true;
  bool window_ok = true;
  bool moment_ok = true;
  double worst_moment_ratio = 0.0;  ///< min residual / max(1, f^p scale), 0 if none
  double window_max_ratio = 0.0;    ///< max sup_norm / ||u0|| over t <= window

  std::vector<std::pair<double, GridField>> snapshots;
  GridField final_field;

  static const char* status_name(Status s) {
    switch (s) {
      case Status::completed: return "completed";
      case Status::blowup_detected: return "blowup";
      case Status::instability_aborted: return "aborted";
    }
    return "?";
  }
  const char* status_name() const { return status_name(status); }
};

inline void validate(const SolveConfig& c, double u0_sup) {
  c.grid.validate();
  if (!(c.p > 1.0)) throw std::invalid_argument("SolveConfig: p must be > 1");
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw std::invalid_argument("SolveConfig: gamma must be in [0,1)");
  if (!(c.time_step > 0.0)) throw std::invalid_argument("SolveConfig: time_step must be > 0");
  if (!(c.t_end > 0.0)) throw std::invalid_argument("SolveConfig: t_end must be > 0");
  if (!(c.blowup_threshold > 10.0 * u0_sup)) {
    throw std::invalid_argument("SolveConfig: blowup_threshold must exceed 10 ||u0||_inf");
  }
  if (c.gamma > 0.0) {
    const double bytes = double(c.steps()) * double(c.grid.total_points()) * 8.0;
    if (bytes > double(c.memory_cap_bytes)) {
      throw std::invalid_argument("SolveConfig: history needs " + std::to_string(bytes / (1 << 20)) +
                                  " MiB, above the configured cap");
    }
  }
}

/// Explicit mild-form integrator exposing single steps.
class MildSolver {
 public:
  explicit MildSolver(SolveConfig config)
      : c_(std::move(config)), scheme_(c_.gamma, c_.time_step, std::max(1, c_.steps() + 1)),
        history_(scheme_) {
    u_ = initial_field(c_);
    validate(c_, u_.sup_norm());
    u0_sup_ = u_.sup_norm();
  }

  const GridField& state() const { return u_; }
  int index() const { return k_; }
  double time() const { return k_ * c_.time_step; }
  const SolveConfig& config() const { return c_; }
  double u0_sup() const { return u0_sup_; }

  /// |u|^{p-1} u pointwise.
  GridField power(const GridField& u) const {
    GridField g(u.spec);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double v = u.values[i];
      g.values[i] = std::pow(std::abs(v), c_.p - 1.0) * v;
    }
    return g;
  }

  /// Advances from t_k to t_{k+1}. Returns false if the new state is not finite.
  bool step() {
    GridField rhs = u_;
    if (!c_.disable_nonlinearity) {
      if (k_ > 0) {
        const GridField F = history_.term();
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values[i] += c_.time_step * F.values[i];
      }
      history_.push(power(u_));
    }
    u_ = apply_semigroup(rhs, c_.time_step, c_.backend);
    ++k_;
    return u_.all_finite();
  }

 private:
  SolveConfig c_;
  FracScheme scheme_;
  MemoryHistory history_;
  GridField u_;
  double u0_sup_ = 0.0;
  int k_ = 0;
};

namespace detail {
inline bool strictly_increasing_tail(const std::vector<double>& v, std::size_t count) {
  if (v.size() < count + 1) return false;
  for (std::size_t i = v.size() - count; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}
}  // namespace detail

inline SolveResult solve(const SolveConfig& config) {
  MildSolver solver(config);
  const SolveConfig& c = solver.config();
  SolveResult r;
  r.u0_sup = solver.u0_sup();
  r.window = local_window(c.p, c.gamma, r.u0_sup);

  const double eps = c.theta_eps > 0.0 ? c.theta_eps : default_theta_eps(c.n());
  std::optional<GridField> theta;
  if (c.monitors.moment_inequality) theta = theta_field(c.grid, c.theta_A, eps);
  const FracScheme scheme(c.gamma, c.time_step, std::max(1, c.steps() + 1));
  std::vector<double> fpow;

  std::size_t next_snapshot = 0;
  std::vector<double> snaps = c.snapshot_times;
  std::sort(snaps.begin(), snaps.end());

  auto record = [&](const GridField& u, double t) {
    r.times.push_back(t);
    r.sup_norms.push_back(u.sup_norm());
    r.l1_norms.push_back(lp_norm(u, 1.0));
    r.l2_norms.push_back(lp_norm(u, 2.0));
    r.lq_norms.push_back(lp_norm(u, c.q_norm));
    r.min_values.push_back(u.min_value());
    if (theta) {
      double acc = 0.0;
      std::vector<double> prod(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) prod[i] = u.values[i] * theta->values[i];
      acc = pairwise_sum(prod) * u.spec.cell_volume();
      r.moment_f.push_back(acc);
      fpow.push_back(std::pow(std::abs(acc), c.p - 1.0) * acc);
    }
    while (next_snapshot < snaps.size() && snaps[next_snapshot] <= t + 1e-12) {
      r.snapshots.emplace_back(t, u);
      ++next_snapshot;
    }
    if (c.observer) c.observer(static_cast<int>(r.times.size()) - 1, t, u);
  };

  record(solver.state(), 0.0);
  const int K = c.steps();
  for (int k = 0; k < K; ++k) {
    const bool finite = solver.step();
    const double t = solver.time();
    if (!finite) {
      r.status = SolveResult::Status::instability_aborted;
      r.message = "non-finite values at t=" + std::to_string(t);
      break;
    }
    record(solver.state(), t);
    if (r.sup_norms.back() > c.blowup_threshold) {
      if (detail::strictly_increasing_tail(r.sup_norms, 10)) {
        r.status = SolveResult::Status::blowup_detected;
        r.t_est = t;
      } else {
        r.status = SolveResult::Status::instability_aborted;
        r.message = "threshold crossed without monotone growth at t=" + std::to_string(t);
      }
      break;
    }
  }
  r.final_field = solver.state();
  r.final_field.overflowed = r.status == SolveResult::Status::blowup_detected;

  // Monitors
  const double tol = c.positivity_tolerance * r.u0_sup;
  if (c.monitors.positivity) {
    for (double m : r.min_values) {
      if (m < -tol) r.positivity_ok = false;
    }
  }
  if (c.monitors.local_window) {
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      if (r.times[i] > r.window + 1e-12) break;
      if (r.u0_sup > 0.0) r.window_max_ratio = std::max(r.window_max_ratio, r.sup_norms[i] / r.u0_sup);
    }
    r.window_ok = r.window_max_ratio <= 2.2;
  }
  r.moment_residual.assign(r.times.size(), std::numeric_limits<double>::quiet_NaN());
  if (theta && r.moment_f.size() >= 3) {
    const auto& f = r.moment_f;
    double scale = 1.0;
    for (double v : fpow) scale = std::max(scale, std::abs(v));
    // residuals only before the threshold crossing
    std::size_t last = f.size() - 1;
    if (r.status != SolveResult::Status::completed) last = f.size() - 2;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < last; ++k) {
      const double df = (f[k + 1] - f[k - 1]) / (2.0 * c.time_step);
      double mem = 0.0;
      if (!c.disable_nonlinearity) mem = memory_term(fpow, scheme, static_cast<int>(k));
      r.moment_residual[k] = df + f[k] - mem;
      worst = std::min(worst, r.moment_residual[k] / scale);
    }
    r.worst_moment_ratio = std::isfinite(worst) ? worst : 0.0;
    r.moment_ok = r.worst_moment_ratio >= -1e-3;
  }
  return r;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline void write_trace_csv(std::ostream& os, const SolveResult& r, double q_norm) {
  os << "t,sup_norm,l1_norm,l2_norm,lq_norm,q,min_value,moment_f,moment_residual\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    os << format_double(r.times[i]) << ',' << format_double(r.sup_norms[i]) << ','
       << format_double(r.l1_norms[i]) << ',' << format_double(r.l2_norms[i]) << ','
       << format_double(r.lq_norms[i]) << ',' << format_double(q_norm) << ','
       << format_double(r.min_values[i]) << ','
       << (i < r.moment_f.size() ? format_double(r.moment_f[i]) : "nan") << ','
       << (i < r.moment_residual.size() ? format_double(r.moment_residual[i]) : "nan") << '\n';
  }
}

inline void write_summary(std::ostream& os, const SolveResult& r, const SolveConfig& c) {
  os << "status = " << r.status_name() << '\n';
  os << "t_est = " << format_double(r.t_est) << '\n';
  os << "window_T_guaranteed = " << format_double(r.window) << '\n';
  os << "window_max_ratio = " << format_double(r.window_max_ratio) << '\n';
  os << "positivity_ok = " << (r.positivity_ok ? "true" : "false") << '\n';
  os << "window_ok = " << (r.window_ok ? "true" : "false") << '\n';
  os << "moment_ok = " << (r.moment_ok ? "true" : "false") << '\n';
  os << "worst_moment_ratio = " << format_double(r.worst_moment_ratio) << '\n';
  os << "steps_recorded = " << r.times.size() << '\n';
  if (!r.message.empty()) os << "message = " << r.message << '\n';
  os << "# config\n";
  os << "n = " << c.grid.n << '\n';
  os << "p = " << format_double(c.p) << '\n';
  os << "gamma = " << format_double(c.gamma) << '\n';
  os << "half_width_xy = " << format_double(c.grid.half_width_xy) << '\n';
  os << "half_width_tau = " << format_double(c.grid.half_width_tau) << '\n';
  os << "points_xy = " << c.grid.points_per_xy_axis << '\n';
  os << "points_tau = " << c.grid.points_per_tau_axis << '\n';
  os << "profile = " << profile_name(c.initial.profile) << '\n';
  os << "amplitude = " << format_double(c.initial.amplitude) << '\n';
  os << "kappa = " << format_double(c.initial.kappa) << '\n';
  os << "time_step = " << format_double(c.time_step) << '\n';
  os << "t_end = " << format_double(c.t_end) << '\n';
  os << "blowup_threshold = " << format_double(c.blowup_threshold) << '\n';
  os << "backend = "
     << (c.backend.kind == SemigroupBackend::Kind::fd_stepping ? "fd_stepping" : "kernel_convolution")
     << '\n';
}

}  // namespace heisenlab
