#pragma once

// Exponent calculator, cut-off and Theta verifiers, dichotomy and lifespan
// scans, and the verify-all suite.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "heisenlab/config.hpp"
#include "heisenlab/cutoff.hpp"
#include "heisenlab/frac_calc.hpp"
#include "heisenlab/grid.hpp"
#include "heisenlab/group.hpp"
#include "heisenlab/heat_kernel.hpp"
#include "heisenlab/mild_solver.hpp"
#include "heisenlab/parallel.hpp"
#include "heisenlab/semigroup.hpp"
#include "heisenlab/stencil.hpp"

namespace heisenlab {

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Exponents

struct ExponentReport {
  int n = 1;
  int Q = 4;
  double gamma = 0.0;
  double p = 0.0;
  std::optional<double> kappa;
  double p_c = 0.0;  ///< +inf when gamma = 0
  double p_gamma = 0.0;
  double p_gamma_alt = 0.0;  ///< (n+2)/(n+gamma)
  double p_sc = 0.0;
  double q_sc = 0.0;
  std::optional<double> lifespan_exponent_L1;     ///< empty when not applicable
  std::optional<double> lifespan_exponent_kappa;  ///< empty when not applicable or no kappa

  std::string to_text() const {
    std::ostringstream os;
    os << std::setprecision(12);
    auto opt = [&](const std::optional<double>& v) {
      std::ostringstream s;
      s << std::setprecision(12);
      if (v) s << *v;
      else s << "not-applicable";
      return s.str();
    };
    os << "n = " << n << '\n'
       << "Q = " << Q << '\n'
       << "gamma = " << gamma << '\n'
       << "p = " << p << '\n'
       << "kappa = " << (kappa ? opt(kappa) : std::string("none")) << '\n'
       << "p_c = " << (std::isinf(p_c) ? std::string("inf") : opt(p_c)) << '\n'
       << "p_gamma = " << p_gamma << '\n'
       << "p_sc = " << p_sc << '\n'
       << "q_sc = " << q_sc << '\n'
       << "lifespan_exponent_L1 = " << opt(lifespan_exponent_L1) << '\n'
       << "lifespan_exponent_kappa = " << (kappa ? opt(lifespan_exponent_kappa) : std::string("none")) << '\n';
    return os.str();
  }
};

inline ExponentReport exponents(int n, double gamma, double p, std::optional<double> kappa = {}) {
  if (n < 1) throw std::invalid_argument("exponents: n must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("exponents: gamma must be in [0,1)");
  if (!(p > 1.0)) throw std::invalid_argument("exponents: p must be > 1");
  ExponentReport r;
  r.n = n;
  r.Q = homogeneous_dimension(n);
  r.gamma = gamma;
  r.p = p;
  r.kappa = kappa;
  const double Q = r.Q;
  r.p_gamma = 1.0 + 2.0 * (2.0 - gamma) / (Q - 2.0 + 2.0 * gamma);
  r.p_gamma_alt = (n + 2.0) / (n + gamma);
  if (std::abs(r.p_gamma - r.p_gamma_alt) > 1e-12 * std::max(1.0, r.p_gamma)) {
    throw std::logic_error("exponents: p_gamma forms disagree");
  }
  r.p_c = gamma == 0.0 ? std::numeric_limits<double>::infinity() : std::max(1.0 / gamma, r.p_gamma);
  r.p_sc = 1.0 + 2.0 * (2.0 - gamma) / Q;
  r.q_sc = Q * (p - 1.0) / (2.0 * (2.0 - gamma));
  const double base = (2.0 - gamma) / (p - 1.0);
  if (base - Q / 2.0 > 0.0) r.lifespan_exponent_L1 = -1.0 / (base - Q / 2.0);
  if (kappa && *kappa > 0.0 && base - *kappa / 2.0 > 0.0) {
    r.lifespan_exponent_kappa = -1.0 / (base - *kappa / 2.0);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cut-off lemma

struct CutoffReport {
  double p = 0.0;
  double ell = 0.0;
  std::vector<double> R;
  std::vector<double> C_hat;
  std::vector<double> inner_max;  ///< max |Delta_H phi_R| where xi_R <= 1/2
  std::vector<double> outer_max;  ///< max |Delta_H phi_R| where xi_R >= 1
  double spread = 0.0;            ///< max C_hat / min C_hat
  bool bounded = false;           ///< spread < 2
};

namespace detail {

struct CutoffPoint {
  double C = 0.0, inner = 0.0, outer = 0.0;
};

inline CutoffPoint cutoff_constant(double R, double p, double ell, const GridSpec& spec) {
  if (!(R > 0.0)) throw std::invalid_argument("verify_cutoff: R must be > 0");
  const double cells = std::min((std::sqrt(R) - std::sqrt(0.5 * R)) / spec.h_xy(), 0.5 * R / spec.h_tau());
  if (cells < 8.0) {
    throw std::invalid_argument("verify_cutoff: grid resolves the transition annulus of R=" + std::to_string(R) +
                                " with only " + std::to_string(cells) + " cells (need 8)");
  }
  if (std::sqrt(R) >= spec.half_width_xy || R >= spec.half_width_tau) {
    throw std::invalid_argument("verify_cutoff: box does not contain the support of phi_R");
  }
  const int N = spec.points_per_xy_axis, Nt = spec.points_per_tau_axis;
  const std::size_t L = spec.line_length();
  std::vector<double> xi(spec.total_points());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double r = koranyi_norm(spec.point(i));
    xi[i] = r * r / R;
  }
  GridField phi(spec);
  for (std::size_t i = 0; i < xi.size(); ++i) phi[i] = std::pow(smooth_transition(xi[i]), ell);
  const GridField lap = sub_laplacian(phi);
  CutoffPoint out;
  std::vector<int> idx(spec.xy_axes());
  for (std::size_t l = 0; l < spec.line_count(); ++l) {
    spec.line_indices(l, idx);
    if (std::any_of(idx.begin(), idx.end(), [&](int i) { return i == 0 || i == N - 1; })) continue;
    for (std::size_t k = 1; k + 1 < static_cast<std::size_t>(Nt); ++k) {
      const std::size_t i = l * L + k;
      const double a = std::abs(lap[i]);
      if (xi[i] <= 0.5) out.inner = std::max(out.inner, a);
      if (xi[i] >= 1.0) out.outer = std::max(out.outer, a);
      // phi* = (1_{[1/2,1]} Phi)^ell vanishes off the annulus
      if (xi[i] < 0.5 || xi[i] > 1.0) continue;
      const double star = std::pow(smooth_transition(xi[i]), ell);
      if (!(star > 1e-12)) continue;
      out.C = std::max(out.C, R * a / std::pow(star, 1.0 / p));
    }
  }
  return out;
}

inline CutoffReport finish_cutoff(CutoffReport rep) {
  const auto [lo, hi] = std::minmax_element(rep.C_hat.begin(), rep.C_hat.end());
  rep.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  rep.bounded = rep.spread < 2.0;
  return rep;
}

}  // namespace detail

/// Smallest C with |Delta_H phi_R| <= (C/R) (phi*_R)^{1/p} at interior grid
/// points where phi*_R > 1e-12, for each R, all on the one grid `spec`.
inline CutoffReport verify_cutoff(const std::vector<double>& Rs, double p, const GridSpec& spec) {
  if (!(p > 1.0)) throw std::invalid_argument("verify_cutoff: p must be > 1");
  if (Rs.empty()) throw std::invalid_argument("verify_cutoff: empty R list");
  spec.validate();
  CutoffReport rep;
  rep.p = p;
  rep.ell = 2.0 * p / (p - 1.0);
  for (double R : Rs) {
    const auto c = detail::cutoff_constant(R, p, rep.ell, spec);
    rep.R.push_back(R);
    rep.C_hat.push_back(c.C);
    rep.inner_max.push_back(c.inner);
    rep.outer_max.push_back(c.outer);
  }
  return detail::finish_cutoff(std::move(rep));
}

/// Grid with `cells` cells across the transition annulus of the smallest R
/// and a box containing the support for the largest R.
inline GridSpec cutoff_grid(const std::vector<double>& Rs, double cells = 20.0, int n = 1) {
  if (Rs.empty()) throw std::invalid_argument("cutoff_grid: empty R list");
  const double rmin = *std::min_element(Rs.begin(), Rs.end());
  const double rmax = *std::max_element(Rs.begin(), Rs.end());
  GridSpec s;
  s.n = n;
  s.half_width_xy = 1.05 * std::sqrt(rmax);
  s.half_width_tau = 1.05 * rmax;
  const double hxy = (std::sqrt(rmin) - std::sqrt(0.5 * rmin)) / cells;
  const double ht = 0.5 * rmin / cells;
  s.points_per_xy_axis = 2 * static_cast<int>(std::ceil(s.half_width_xy / hxy)) + 1;
  s.points_per_tau_axis = 2 * static_cast<int>(std::ceil(s.half_width_tau / ht)) + 1;
  return s;
}

/// Same constant, but each R is evaluated on its own grid cutoff_grid({R}, cells),
/// so every R sees the same number of cells across its annulus.
inline CutoffReport verify_cutoff_scaled(const std::vector<double>& Rs, double p, double cells = 20.0, int n = 1) {
  if (!(p > 1.0)) throw std::invalid_argument("verify_cutoff: p must be > 1");
  if (Rs.empty()) throw std::invalid_argument("verify_cutoff: empty R list");
  CutoffReport rep;
  rep.p = p;
  rep.ell = 2.0 * p / (p - 1.0);
  for (double R : Rs) {
    const auto c = detail::cutoff_constant(R, p, rep.ell, cutoff_grid({R}, cells, n));
    rep.R.push_back(R);
    rep.C_hat.push_back(c.C);
    rep.inner_max.push_back(c.inner);
    rep.outer_max.push_back(c.outer);
  }
  return detail::finish_cutoff(std::move(rep));
}

// ---------------------------------------------------------------------------
// Theta lemma

struct ThetaLemmaReport {
  double eps = 0.0;
  double A = 0.0;
  std::size_t points = 0;      ///< interior points checked
  std::size_t violations = 0;  ///< points with Delta_H Theta < -2 eps (Q+2) Theta - factor * estimate
  double worst_margin = 0.0;   ///< min of (Delta_H Theta + 2 eps (Q+2) Theta) / Theta
  double max_estimate = 0.0;   ///< max truncation estimate relative to Theta
};

/// Checks Delta_H Theta >= -2 eps (Q+2) Theta - factor * est at interior points.
/// est is the Richardson estimate |D_h - D_{h/2}| * 4/3 taken from a grid with
/// halved spacings that contains every node of `spec`.
inline ThetaLemmaReport verify_theta_lemma(const GridSpec& spec, double A, double eps, double factor = 5.0) {
  const GridField th = theta_field(spec, A, eps);
  GridSpec fine = spec;
  fine.points_per_xy_axis = 2 * spec.points_per_xy_axis - 1;
  fine.points_per_tau_axis = 2 * spec.points_per_tau_axis - 1;
  const double c = th[0] / std::exp(-eps * std::sqrt(A + std::pow(spec.point(0).z_norm_sq(), 2) +
                                                         spec.point(0).tau * spec.point(0).tau));
  GridField thf = GridField::sample(fine, [&](const GroupPoint& e) {
    const double s = e.z_norm_sq();
    return c * std::exp(-eps * std::sqrt(A + s * s + e.tau * e.tau));
  });
  const GridField lap = sub_laplacian(th);
  const GridField lapf = sub_laplacian(thf);
  const double bound = 2.0 * eps * (homogeneous_dimension(spec.n) + 2.0);

  ThetaLemmaReport rep;
  rep.eps = eps;
  rep.A = A;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int N = spec.points_per_xy_axis, Nt = spec.points_per_tau_axis;
  const int A2 = spec.xy_axes();
  std::vector<int> idx(A2), fidx(A2);
  for (std::size_t l = 0; l < spec.line_count(); ++l) {
    spec.line_indices(l, idx);
    if (std::any_of(idx.begin(), idx.end(), [&](int i) { return i == 0 || i == N - 1; })) continue;
    for (int a = 0; a < A2; ++a) fidx[a] = 2 * idx[a];
    const std::size_t fl = fine.line_of(fidx);
    for (int k = 1; k < Nt - 1; ++k) {
      const std::size_t i = l * spec.line_length() + k;
      const std::size_t fi = fl * fine.line_length() + 2 * k;
      const double est = std::abs(lap[i] - lapf[fi]) * 4.0 / 3.0;
      const double margin = lap[i] + bound * th[i];
      ++rep.points;
      if (margin < -factor * est) ++rep.violations;
      rep.worst_margin = std::min(rep.worst_margin, margin / th[i]);
      rep.max_estimate = std::max(rep.max_estimate, est / th[i]);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Scans

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  ///< 95% confidence half-width of the slope
  int points = 0;
};

inline LineFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.points = static_cast<int>(x.size());
  if (x.size() < 2) throw std::invalid_argument("ols_fit: need at least 2 points");
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / m;
    my += y[i] / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    const double se = std::sqrt(rss / (m - 2.0) / sxx);
    boost::math::students_t dist(m - 2.0);
    f.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  }
  return f;
}

struct ScanCell {
  double p = 0.0;
  double amplitude = 0.0;
  std::string status;  ///< completed | blowup | aborted
  double t_est = std::numeric_limits<double>::quiet_NaN();
  double final_sup = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

struct ScanResult {
  std::vector<ScanCell> cells;
  // lifespan scans only
  std::string fit_status = "nofit";  ///< completed | nofit
  LineFit fit;
  double theoretical = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> censored;  ///< eps values whose run completed without blow-up
  bool monotone = true;          ///< T_est does not increase with eps
};

namespace detail {

inline ScanCell run_cell(const SolveConfig& cfg) {
  ScanCell cell;
  cell.p = cfg.p;
  cell.amplitude = cfg.initial.amplitude;
  try {
    const SolveResult r = solve(cfg);
    cell.status = r.status_name();
    cell.t_est = r.t_est;
    cell.final_sup = r.sup_norms.empty() ? NAN : r.sup_norms.back();
    cell.message = r.message;
  } catch (const std::exception& e) {
    cell.status = "aborted";
    cell.message = e.what();
  }
  return cell;
}

inline void run_cells(std::vector<SolveConfig>& cfgs, std::vector<ScanCell>& out, int workers,
                      const std::string& out_dir) {
  out.resize(cfgs.size());
  parallel_for(
      cfgs.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          cfgs[i].monitors.moment_inequality = false;
          out[i] = run_cell(cfgs[i]);
          if (!out_dir.empty()) {
            std::ofstream os(std::filesystem::path(out_dir) / ("cell_" + std::to_string(i) + ".txt"));
            os << "p = " << format_double(out[i].p) << "\namplitude = " << format_double(out[i].amplitude)
               << "\nstatus = " << out[i].status << "\nt_est = " << format_double(out[i].t_est) << '\n';
          }
        }
      },
      workers);
}

}  // namespace detail

/// Runs solve for every (p, amplitude) pair, p-major.
inline ScanResult scan_dichotomy(int n, double gamma, const std::vector<double>& ps,
                                 const std::vector<double>& amplitudes, const SolveConfig& base,
                                 int workers = 1, const std::string& out_dir = "") {
  std::vector<SolveConfig> cfgs;
  for (double p : ps) {
    for (double a : amplitudes) {
      SolveConfig c = base;
      c.grid.n = n;
      c.gamma = gamma;
      c.p = p;
      c.initial.amplitude = a;
      c.observer = nullptr;
      cfgs.push_back(c);
    }
  }
  ScanResult res;
  detail::run_cells(cfgs, res.cells, workers, out_dir);
  return res;
}

enum class LifespanProfile { integrable, power_decay };

/// Solves with data eps * u0 for every eps and fits log T_est against log eps.
inline ScanResult scan_lifespan(int n, double gamma, double p, const std::vector<double>& eps,
                                LifespanProfile profile, double kappa, const SolveConfig& base,
                                int workers = 1, const std::string& out_dir = "") {
  const ExponentReport ex = exponents(n, gamma, p, profile == LifespanProfile::power_decay
                                                       ? std::optional<double>(kappa)
                                                       : std::nullopt);
  ScanResult res;
  if (profile == LifespanProfile::integrable) {
    if (!(p < ex.p_sc)) throw std::invalid_argument("scan_lifespan: integrable data needs p < p_sc");
    res.theoretical = *ex.lifespan_exponent_L1;
  } else {
    if (!(kappa > 0.0 && kappa < 2.0 * (2.0 - gamma) / (p - 1.0))) {
      throw std::invalid_argument("scan_lifespan: power decay needs 0 < kappa < 2(2-gamma)/(p-1)");
    }
    res.theoretical = *ex.lifespan_exponent_kappa;
  }
  std::vector<SolveConfig> cfgs;
  for (double e : eps) {
    SolveConfig c = base;
    c.grid.n = n;
    c.gamma = gamma;
    c.p = p;
    c.initial.amplitude = e;
    if (profile == LifespanProfile::power_decay) {
      c.initial.profile = InitialData::Profile::power_decay;
      c.initial.kappa = kappa;
    } else if (c.initial.profile == InitialData::Profile::power_decay) {
      c.initial.profile = InitialData::Profile::koranyi_gaussian;
    }
    c.observer = nullptr;
    cfgs.push_back(c);
  }
  detail::run_cells(cfgs, res.cells, workers, out_dir);

  std::vector<std::pair<double, double>> pts;
  for (const auto& c : res.cells) {
    if (c.status == "blowup") pts.emplace_back(c.amplitude, c.t_est);
    else res.censored.push_back(c.amplitude);
  }
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].second > pts[i - 1].second + 1e-12) res.monotone = false;
  }
  if (pts.size() >= 4) {
    std::vector<double> x, y;
    for (const auto& [e, T] : pts) {
      x.push_back(std::log(e));
      y.push_back(std::log(T));
    }
    res.fit = ols_fit(x, y);
    res.fit_status = "completed";
  }
  return res;
}

inline void write_dichotomy_csv(std::ostream& os, const ScanResult& r) {
  os << "p,amplitude,status,t_est,final_sup\n";
  for (const auto& c : r.cells) {
    os << format_double(c.p) << ',' << format_double(c.amplitude) << ',' << c.status << ','
       << format_double(c.t_est) << ',' << format_double(c.final_sup) << '\n';
  }
}

inline void write_lifespan_csv(std::ostream& os, const ScanResult& r) {
  os << "eps,status,t_est\n";
  for (const auto& c : r.cells) {
    os << format_double(c.amplitude) << ',' << c.status << ',' << format_double(c.t_est) << '\n';
  }
}

inline void write_lifespan_fit_csv(std::ostream& os, const ScanResult& r) {
  os << "slope,half_width,theoretical,points,censored,monotone,status\n";
  const bool ok = r.fit_status == "completed";
  os << (ok ? format_double(r.fit.slope) : "nan") << ',' << (ok ? format_double(r.fit.half_width) : "nan")
     << ',' << format_double(r.theoretical) << ',' << r.fit.points << ',' << r.censored.size() << ','
     << (r.monotone ? "true" : "false") << ',' << r.fit_status << '\n';
}

// ---------------------------------------------------------------------------
// verify-all

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  std::string text(std::uint64_t seed) const {
    std::ostringstream os;
    os << "heisenlab verify-all " << kVersion << "\nseed = " << seed << '\n';
    for (const auto& c : checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
    os << "summary: " << checks.size() - failed << '/' << checks.size() << " passed\n";
    return os.str();
  }
};

namespace detail {

inline std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

template <class F>
void run_check(VerifyReport& rep, const std::string& name, F&& f) {
  CheckResult c;
  c.name = name;
  try {
    f(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("error: ") + e.what();
  }
  rep.checks.push_back(std::move(c));
}

/// Smooth non-polynomial field used for stencil order checks.
inline double stencil_probe(const GroupPoint& e) {
  return std::sin(0.7 * e.x[0] + 0.3) * std::cos(0.5 * e.y[0]) * std::exp(0.2 * e.tau) +
         0.3 * e.x[0] * e.x[0] * e.tau;
}

inline double stencil_probe_lap(const GroupPoint& e) {
  // Delta_H of stencil_probe for n = 1, written out term by term.
  const double x = e.x[0], y = e.y[0], t = e.tau;
  const double S = std::sin(0.7 * x + 0.3), C = std::cos(0.7 * x + 0.3);
  const double cy = std::cos(0.5 * y), sy = std::sin(0.5 * y);
  const double E = std::exp(0.2 * t);
  const double fxx = -0.49 * S * cy * E + 0.6 * t;
  const double fyy = -0.25 * S * cy * E;
  const double ftt = 0.04 * S * cy * E;
  const double fyt = -0.5 * 0.2 * S * sy * E;
  const double fxt = 0.7 * 0.2 * C * cy * E + 0.6 * x;
  return fxx + fyy + 4.0 * (x * x + y * y) * ftt + 4.0 * (x * fyt - y * fxt);
}

inline double max_interior_error(const GridSpec& s, int margin) {
  const GridField f = GridField::sample(s, stencil_probe);
  const GridField lap = sub_laplacian(f);
  double err = 0.0;
  std::vector<int> idx(s.xy_axes());
  for (std::size_t i = 0; i < f.size(); ++i) {
    s.line_indices(i / s.line_length(), idx);
    const int k = static_cast<int>(i % s.line_length());
    bool inside = k >= margin && k < s.points_per_tau_axis - margin;
    for (int v : idx) inside = inside && v >= margin && v < s.points_per_xy_axis - margin;
    if (!inside) continue;
    err = std::max(err, std::abs(lap[i] - stencil_probe_lap(s.point(i))));
  }
  return err;
}

}  // namespace detail

/// Standard box for semigroup-law checks at t = s = 0.5.
inline GridSpec standard_semigroup_box() { return GridSpec{1, 5.0, 20.0, 33, 121}; }

/// Box used for kernel mass checks at time t.
inline GridSpec kernel_mass_box(double t) { return GridSpec{1, 6.0 * std::sqrt(t) * 1.5, 40.0 * t, 65, 97}; }

inline VerifyReport verify_all(const LabConfig& cfg) {
  VerifyReport rep;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  // kernel checks use the rule exactly as configured, without the alias guard
  KernelQuadrature q = cfg.quadrature;
  q.guard_aliasing = false;

  detail::run_check(rep, "group_associativity", [&](CheckResult& c) {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      auto rnd = [&] { return GroupPoint({3 * U(rng), 3 * U(rng)}, {3 * U(rng), 3 * U(rng)}, 3 * U(rng)); };
      const GroupPoint a = rnd(), b = rnd(), d = rnd();
      const GroupPoint l = group_multiply(group_multiply(a, b), d);
      const GroupPoint r = group_multiply(a, group_multiply(b, d));
      for (int k = 0; k < 2; ++k) worst = std::max({worst, std::abs(l.x[k] - r.x[k]), std::abs(l.y[k] - r.y[k])});
      worst = std::max(worst, std::abs(l.tau - r.tau));
    }
    c.pass = worst <= 1e-12;
    c.detail = "max deviation " + detail::sci(worst);
  });

  detail::run_check(rep, "koranyi_homogeneity", [&](CheckResult& c) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const GroupPoint a({2 * U(rng)}, {2 * U(rng)}, 2 * U(rng));
      for (double lam : {0.5, 2.0, 10.0}) {
        const double ref = lam * koranyi_norm(a);
        worst = std::max(worst, std::abs(koranyi_norm(dilate(a, lam)) - ref) / std::max(ref, 1e-300));
      }
    }
    c.pass = worst <= 1e-14;
    c.detail = "max relative deviation " + detail::sci(worst);
  });

  detail::run_check(rep, "stencil_second_order", [&](CheckResult& c) {
    const double e1 = detail::max_interior_error(GridSpec{1, 2.0, 2.0, 17, 17}, 2);
    const double e2 = detail::max_interior_error(GridSpec{1, 2.0, 2.0, 33, 33}, 4);
    c.pass = e1 / e2 >= 3.5;
    c.detail = "error ratio under halving " + detail::sci(e1 / e2);
  });

  for (double t : {0.5, 1.0}) {
    detail::run_check(rep, "kernel_mass_t" + detail::sci(t), [&](CheckResult& c) {
      const auto k = sample_kernel(t, kernel_mass_box(t), q);
      const double m = trapezoid_integral(k.field);
      c.pass = std::abs(m - 1.0) <= 1e-3;
      c.detail = "mass " + detail::sci(m) + ", clamped " + std::to_string(k.clamped_points);
    });
  }

  detail::run_check(rep, "kernel_positivity", [&](CheckResult& c) {
    const auto k = sample_kernel(1.0, kernel_mass_box(1.0), q);
    const double peak = k.field.max_value();
    c.pass = k.most_negative >= -1e-10 * std::max(1.0, peak) && k.field.min_value() >= 0.0;
    c.detail = "most negative raw value " + detail::sci(k.most_negative);
  });

  detail::run_check(rep, "kernel_scaling_symmetry", [&](CheckResult& c) {
    double ws = 0.0, wy = 0.0;
    for (int i = 0; i < 25; ++i) {
      const GroupPoint e({1.5 * U(rng)}, {1.5 * U(rng)}, 2.0 * U(rng));
      for (double r : {0.5, 2.0}) {
        for (double t : {0.25, 1.0}) {
          const double a = kernel_value(dilate(e, r), r * r * t, q);
          const double b = std::pow(r, -4.0) * kernel_value(e, t, q);
          ws = std::max(ws, std::abs(a - b) / std::abs(b));
        }
      }
      const double h = kernel_value(e, 1.0, q);
      wy = std::max(wy, std::abs(kernel_value(group_inverse(e), 1.0, q) - h) / std::abs(h));
    }
    c.pass = ws <= 1e-6 && wy <= 1e-10;
    c.detail = "scaling " + detail::sci(ws) + ", symmetry " + detail::sci(wy);
  });

  detail::run_check(rep, "kernel_rule_agreement", [&](CheckResult& c) {
    KernelQuadrature gl = q;
    gl.rule = KernelQuadrature::Rule::gauss_legendre;
    const GroupPoint e = GroupPoint::h1(0.4, -0.3, 0.7);
    const double a = kernel_value(e, 1.0, q), b = kernel_value(e, 1.0, gl);
    c.pass = std::abs(a - b) <= 1e-8 * std::abs(b);
    c.detail = "trapezoid vs Gauss-Legendre relative " + detail::sci(std::abs(a - b) / std::abs(b));
  });

  detail::run_check(rep, "kernel_gradient_scaling", [&](CheckResult& c) {
    std::vector<double> v;
    std::string s;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      v.push_back(horizontal_gradient_l1(sample_kernel(t, kernel_mass_box(t), q).field) * std::sqrt(t));
      s += " " + detail::sci(v.back());
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    c.pass = *lo > 0.0 && *hi / *lo <= 1.1;
    c.detail = "sqrt(t) ||grad_H h_t||_1:" + s;
  });

  detail::run_check(rep, "semigroup_defect", [&](CheckResult& c) {
    const GridSpec box = standard_semigroup_box();
    const double d = semigroup_defect(0.5, 0.5, box, q);
    const double peak = sample_kernel(1.0, box, q).field.max_value();
    c.pass = d <= 5e-3 * peak;
    c.detail = "defect/peak " + detail::sci(d / peak);
  });

  detail::run_check(rep, "young_l1", [&](CheckResult& c) {
    const GridSpec s{1, 3.0, 6.0, 17, 25};
    const double cx = 0.5 * U(rng), ct = U(rng);
    const GridField f = GridField::sample(s, [&](const GroupPoint& e) {
      return std::exp(-std::pow(e.x[0] - cx, 2) - e.y[0] * e.y[0] - std::pow(e.tau - ct, 2));
    });
    const GridField g = GridField::sample(s, [&](const GroupPoint& e) {
      return std::exp(-2.0 * e.z_norm_sq() - 0.5 * e.tau * e.tau);
    });
    const double lhs = lp_norm(heisenberg_convolve(f, g), 1.0);
    const double rhs = lp_norm(f, 1.0) * lp_norm(g, 1.0);
    c.pass = lhs <= rhs * (1.0 + 1e-9);
    c.detail = "||f*g||_1 / (||f||_1 ||g||_1) = " + detail::sci(lhs / rhs);
  });

  {
    const GridSpec in{1, 0.75, 0.5, 13, 13};
    const GridField bump = GridField::sample(in, [](const GroupPoint& e) {
      const double r = koranyi_norm(e) / 0.5;
      return r < 1.0 ? std::pow(1.0 - r * r, 3) : 0.0;
    });
    const std::vector<double> times{0.5, 1.0, 2.0, 5.0};
    DecayFitOptions opt;
    opt.quadrature = q;
    const std::vector<std::pair<double, double>> pq{{1.0, INFINITY}, {1.0, 2.0}, {1.0, 1.0}};
    for (const auto& [p, qq] : pq) {
      const std::string name = "lp_lq_fit_p" + detail::sci(p) + "_q" + (std::isinf(qq) ? "inf" : detail::sci(qq));
      detail::run_check(rep, name, [&](CheckResult& c) {
        const DecayFit fit = lp_lq_decay_fit(bump, p, qq, times, opt);
        const double tol = fit.theoretical == 0.0 ? 0.05 : 0.15;
        c.pass = std::abs(fit.slope - fit.theoretical) <= tol;
        c.detail = "slope " + detail::sci(fit.slope) + " vs " + detail::sci(fit.theoretical);
      });
    }
  }

  detail::run_check(rep, "frac_weights_telescoping", [&](CheckResult& c) {
    double worst = 0.0;
    for (double g : {0.0, 0.3, 0.5, 0.9}) {
      const FracScheme s(g, 1e-3, 10000);
      double acc = 0.0;
      for (int k = 1; k <= 10000; ++k) {
        acc += s.weights[k];
        const double exact = std::pow(s.time(k), s.alpha) / s.alpha;
        worst = std::max(worst, std::abs(acc - exact) / exact);
      }
    }
    c.pass = worst <= 1e-12;
    c.detail = "max relative deviation " + detail::sci(worst);
  });

  detail::run_check(rep, "frac_w1_oracle", [&](CheckResult& c) {
    const double T = 2.0, sigma = cfg.sigma;
    double worst = 0.0;
    for (double a : {0.3, 0.5, 0.7}) {
      const auto f = TimeSeries::sample(0.0, T, 4096, [&](double t) { return std::pow(1.0 - t / T, sigma); });
      const auto d = rl_derivative_right(f, a);
      for (int k = 0; k <= 4096; ++k) {
        const double t = f.time(k);
        if (t < 0.1 * T - 1e-12 || t > 0.9 * T + 1e-12) continue;
        const double ex = w1_exact(t, T, sigma, a, W1Order::alpha);
        worst = std::max(worst, std::abs(d.values[k] - ex) / std::abs(ex));
      }
    }
    c.pass = worst <= 1e-2;
    c.detail = "sigma " + detail::sci(sigma) + ", max relative error " + detail::sci(worst);
  });

  detail::run_check(rep, "frac_roundtrip_ibp", [&](CheckResult& c) {
    double rt = 0.0, ibp = 0.0;
    for (double a : {0.3, 0.5, 0.7}) {
      const auto f = TimeSeries::sample(0.0, 1.0, 4096, [](double t) { return 1.0 + t + t * t; });
      const auto r = rl_derivative_left(rl_integral_left(f, a), a);
      for (int k = 410; k <= 3686; ++k) rt = std::max(rt, std::abs(r.values[k] - f.values[k]) / std::abs(f.values[k]));
      const auto w = TimeSeries::sample(0.0, 1.0, 4096, [](double t) { return std::pow(1.0 - t, 3); });
      const auto g = TimeSeries::sample(0.0, 1.0, 4096, [](double t) { return std::pow(std::sin(M_PI * t), 2); });
      const auto d = integration_by_parts(w, g, a);
      ibp = std::max(ibp, d.defect / d.scale);
    }
    c.pass = rt <= 1e-3 && ibp <= 1e-3;
    c.detail = "round trip " + detail::sci(rt) + ", ibp " + detail::sci(ibp);
  });

  detail::run_check(rep, "cutoff_lemma", [&](CheckResult& c) {
    const CutoffReport r = verify_cutoff_scaled(cfg.cutoff_R, 1.5);
    std::string s;
    for (std::size_t i = 0; i < r.R.size(); ++i) s += " C(" + detail::sci(r.R[i]) + ")=" + detail::sci(r.C_hat[i]);
    c.pass = r.bounded;
    c.detail = "spread " + detail::sci(r.spread) + ";" + s;
  });

  detail::run_check(rep, "theta_lemma", [&](CheckResult& c) {
    const auto r = verify_theta_lemma(cfg.solve.grid, 1.0, default_theta_eps(cfg.solve.grid.n));
    c.pass = r.violations == 0;
    c.detail = std::to_string(r.violations) + " violations over " + std::to_string(r.points) +
               " points, worst margin " + detail::sci(r.worst_margin);
  });

  detail::run_check(rep, "exponent_identities", [&](CheckResult& c) {
    std::uniform_int_distribution<int> N(1, 6);
    std::uniform_real_distribution<double> G(0.0, 0.999);
    double worst = 0.0;
    bool qsc_ok = true;
    for (int i = 0; i < 100; ++i) {
      const int n = N(rng);
      const double g = G(rng);
      const auto e = exponents(n, g, 2.0);
      worst = std::max(worst, std::abs(e.p_gamma - e.p_gamma_alt));
      if (e.p_c < e.p_sc) qsc_ok = false;
      if (std::isfinite(e.p_c)) {
        const double p = e.p_c * (1.0 + 0.5 * (G(rng) + 0.001));
        if (!(exponents(n, g, p).q_sc > 1.0)) qsc_ok = false;
      }
    }
    c.pass = worst <= 1e-12 && qsc_ok;
    c.detail = "p_gamma forms " + detail::sci(worst) + ", q_sc and p_c >= p_sc " + (qsc_ok ? "ok" : "violated");
  });

  return rep;
}

}  // namespace heisenlab
