#pragma once

// Group convolution on grids and the heat semigroup S(t) f = f * h_t.
//
//   (f * g)(eta) = sum_xi f(eta o xi^{-1}) g(xi) dV
//
// f is read off-grid by multilinear interpolation against zero ghost values.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "heisenlab/grid.hpp"
#include "heisenlab/heat_kernel.hpp"
#include "heisenlab/parallel.hpp"
#include "heisenlab/stencil.hpp"

namespace heisenlab {

/// Multilinear interpolation of f at an arbitrary point; nodes outside the
/// box count as zero.
inline double interpolate(const GridField& f, const GroupPoint& p) {
  const GridSpec& s = f.spec;
  const int A = s.xy_axes();
  const int D = A + 1;
  std::vector<int> base(D);
  std::vector<double> frac(D);
  std::vector<int> count(D);
  for (int a = 0; a < D; ++a) {
    double c;
    if (a == A) {
      c = (p.tau + s.half_width_tau) / s.h_tau();
      count[a] = s.points_per_tau_axis;
    } else {
      const double v = a < s.n ? p.x[a] : p.y[a - s.n];
      c = (v + s.half_width_xy) / s.h_xy();
      count[a] = s.points_per_xy_axis;
    }
    if (!(c > -1.0 && c < count[a])) return 0.0;
    const double fl = std::floor(c);
    base[a] = static_cast<int>(fl);
    frac[a] = c - fl;
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << D); ++corner) {
    double w = 1.0;
    std::size_t lin = 0;
    bool inside = true;
    for (int a = 0; a < D; ++a) {
      const int bit = (corner >> a) & 1;
      const int i = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
      if (i < 0 || i >= count[a]) inside = false;
      lin = lin * count[a] + static_cast<std::size_t>(std::max(i, 0));
    }
    if (inside && w != 0.0) acc += w * f.values[lin];
  }
  return acc;
}

/// Reference O(N^2) convolution evaluating every (eta, xi) pair directly.
inline GridField heisenberg_convolve_naive(const GridField& f, const GridField& g) {
  f.require_same_spec(g);
  const GridSpec& s = f.spec;
  GridField out(s);
  const double dV = s.cell_volume();
  std::vector<GroupPoint> pts(s.total_points());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = s.point(i);
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> terms(g.size());
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        terms[j] = g[j] == 0.0 ? 0.0
                               : interpolate(f, group_multiply(pts[i], group_inverse(pts[j]))) * g[j];
      }
      out[i] = pairwise_sum(terms) * dV;
    }
  });
  return out;
}

namespace detail {

struct LineSupport {
  int lo = 0;
  int hi = -1;  ///< inclusive; hi < lo means the line is treated as zero
};

inline std::vector<LineSupport> line_supports(const GridField& f, double threshold) {
  const std::size_t L = f.spec.line_length();
  std::vector<LineSupport> sup(f.spec.line_count());
  for (std::size_t l = 0; l < sup.size(); ++l) {
    const double* v = &f.values[l * L];
    int lo = 0, hi = static_cast<int>(L) - 1;
    while (lo <= hi && !(std::abs(v[lo]) > threshold)) ++lo;
    while (hi >= lo && !(std::abs(v[hi]) > threshold)) --hi;
    sup[l] = {lo, hi};
  }
  return sup;
}

}  // namespace detail

/// Line-factored convolution. For fixed xy parts of eta and xi the tau shift
/// is constant, so each pair of lines reduces to a 1-D correlation with a
/// linearly interpolated copy of f. Entries of g with magnitude at most
/// g_threshold times its peak are skipped.
inline GridField heisenberg_convolve(const GridField& f, const GridField& g,
                                     double g_threshold = 1e-14) {
  f.require_same_spec(g);
  const GridSpec& s = f.spec;
  const int n = s.n;
  const int A = s.xy_axes();
  const int N = s.points_per_xy_axis;
  const int Nt = s.points_per_tau_axis;
  const std::size_t L = s.line_length();
  const double ht = s.h_tau();
  const double dV = s.cell_volume();

  const double gpeak = g.sup_norm();
  GridField out(s);
  if (gpeak == 0.0 || f.sup_norm() == 0.0) return out;
  const auto gsup = detail::line_supports(g, g_threshold * gpeak);
  const auto fsup = detail::line_supports(f, 0.0);

  std::vector<std::size_t> glines;
  for (std::size_t l = 0; l < gsup.size(); ++l) {
    if (gsup[l].hi >= gsup[l].lo) glines.push_back(l);
  }
  std::vector<int> gidx_all(glines.size() * A);
  for (std::size_t q = 0; q < glines.size(); ++q) {
    s.line_indices(glines[q], std::span<int>(&gidx_all[q * A], A));
  }

  // Offsets of difference indices: position of z - z' on f's xy axes is
  // i_eta - i_xi + (N-1)/2, an integer for odd N and a half-integer otherwise.
  const bool half = (N % 2) == 0;
  const int corners = half ? (1 << A) : 1;
  const int off = (N - 1) / 2;

  parallel_for(s.line_count(), [&](std::size_t b, std::size_t e) {
    std::vector<int> eidx(A), fidx(A);
    std::vector<double> F(L), Ftheta(L + 1), acc(L);
    for (std::size_t le = b; le < e; ++le) {
      s.line_indices(le, eidx);
      std::fill(acc.begin(), acc.end(), 0.0);
      bool any = false;
      for (std::size_t q = 0; q < glines.size(); ++q) {
        const int* gi = &gidx_all[q * A];
        // Assemble the (possibly xy-interpolated) f line at z_eta - z_xi.
        std::fill(F.begin(), F.end(), 0.0);
        int flo = static_cast<int>(L), fhi = -1;
        for (int c = 0; c < corners; ++c) {
          bool inside = true;
          double w = 1.0;
          for (int a = 0; a < A; ++a) {
            const int bit = half ? ((c >> a) & 1) : 0;
            const int i = eidx[a] - gi[a] + off + bit;
            if (i < 0 || i >= N) inside = false;
            fidx[a] = i;
            if (half) w *= 0.5;
          }
          if (!inside) continue;
          const std::size_t fl = s.line_of(fidx);
          const auto& fs = fsup[fl];
          if (fs.hi < fs.lo) continue;
          const double* fv = &f.values[fl * L];
          for (int k = fs.lo; k <= fs.hi; ++k) F[k] += w * fv[k];
          flo = std::min(flo, fs.lo);
          fhi = std::max(fhi, fs.hi);
        }
        if (fhi < flo) continue;

        double symp = 0.0;
        for (int i = 0; i < n; ++i) {
          const double xe = s.xy_coord(eidx[i]), ye = s.xy_coord(eidx[n + i]);
          const double xg = s.xy_coord(gi[i]), yg = s.xy_coord(gi[n + i]);
          symp += xe * yg - xg * ye;
        }
        const double c = -2.0 * symp / ht + 0.5 * (Nt - 1);
        double c0 = std::floor(c);
        double theta = c - c0;
        if (theta < 1e-9) theta = 0.0;
        if (theta > 1.0 - 1e-9) {
          theta = 0.0;
          c0 += 1.0;
        }
        const long ic0 = static_cast<long>(c0);

        // Ftheta[i + 1] = (1 - theta) F[i] + theta F[i + 1], i in [-1, L-1].
        const int tlo = theta > 0.0 ? flo - 1 : flo;
        for (int i = tlo; i <= fhi; ++i) {
          const double a0 = (i >= 0) ? F[i] : 0.0;
          const double a1 = (i + 1 < static_cast<int>(L)) ? F[i + 1] : 0.0;
          Ftheta[i + 1] = (1.0 - theta) * a0 + theta * a1;
        }

        const auto& gs = gsup[glines[q]];
        const double* gv = &g.values[glines[q] * L];
        for (int m = gs.lo; m <= gs.hi; ++m) {
          const double gm = gv[m];
          if (gm == 0.0) continue;
          // k - m + c0 in [tlo, fhi]
          const long klo = std::max<long>(0, tlo + m - ic0);
          const long khi = std::min<long>(static_cast<long>(L) - 1, fhi + m - ic0);
          if (khi < klo) continue;
          const double* src = &Ftheta[klo - m + ic0 + 1];
          double* dst = &acc[klo];
          const long cnt = khi - klo + 1;
          for (long k = 0; k < cnt; ++k) dst[k] += gm * src[k];
          any = true;
        }
      }
      if (any) {
        auto o = out.line(le);
        for (std::size_t k = 0; k < L; ++k) o[k] = acc[k] * dV;
      }
    }
  });
  return out;
}

struct SemigroupBackend {
  enum class Kind { kernel_convolution, fd_stepping };
  Kind kind = Kind::kernel_convolution;
  KernelQuadrature quadrature{};
  /// Kernel entries below this fraction of the kernel peak are skipped.
  double kernel_threshold = 1e-14;
  /// Fraction of fd_stability_bound used for the forward Euler substep.
  double fd_safety = 1.0;

  static SemigroupBackend kernel(KernelQuadrature q = {}) {
    SemigroupBackend b;
    b.quadrature = q;
    return b;
  }
  static SemigroupBackend fd() {
    SemigroupBackend b;
    b.kind = Kind::fd_stepping;
    return b;
  }

  /// Last sampled kernel, reused when t and the grid repeat (time stepping).
  struct Cache {
    double t = -1.0;
    GridSpec spec{};
    GridField kernel;
  };
  std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

namespace detail {

/// Forward Euler for u_t = Delta_H u with zero values outside the box, on a
/// tau-padded copy of the field so that every line runs one branch-free loop.
/// Same stencil as sub_laplacian(f, FaceRule::zero_extension).
class FdStepper {
 public:
  explicit FdStepper(const GridSpec& s) : s_(s), W_(s.line_length() + 2) {
    const std::size_t lines = s.line_count();
    a_.assign((lines + 1) * W_, 0.0);
    b_.assign((lines + 1) * W_, 0.0);
    const int A = s.xy_axes();
    neighbors_.resize(lines * 2 * A);
    r2_.resize(lines);
    coords_.resize(lines * A);
    std::vector<int> idx(A);
    for (std::size_t l = 0; l < lines; ++l) {
      s.line_indices(l, idx);
      double r2 = 0.0;
      for (int a = 0; a < A; ++a) {
        const double x = s.xy_coord(idx[a]);
        coords_[l * A + a] = x;
        r2 += x * x;
        const std::size_t stride = s.xy_stride(a) / s.line_length();
        neighbors_[(l * A + a) * 2] = idx[a] > 0 ? l - stride : lines;
        neighbors_[(l * A + a) * 2 + 1] = idx[a] + 1 < s.points_per_xy_axis ? l + stride : lines;
      }
      r2_[l] = r2;
    }
  }

  void load(const GridField& f) {
    const std::size_t L = s_.line_length();
    for (std::size_t l = 0; l < s_.line_count(); ++l) {
      std::copy_n(&f.values[l * L], L, &a_[l * W_ + 1]);
    }
  }
  void store(GridField& f) const {
    const std::size_t L = s_.line_length();
    for (std::size_t l = 0; l < s_.line_count(); ++l) {
      std::copy_n(&a_[l * W_ + 1], L, &f.values[l * L]);
    }
  }

  void step(double dt) {
    const int n = s_.n;
    const int A = s_.xy_axes();
    const double h = s_.h_xy(), ht = s_.h_tau();
    const double cxy = dt / (h * h);
    const double ctt = 4.0 * dt / (ht * ht);
    const double cmix = 4.0 * dt / (4.0 * h * ht);
    const std::size_t L = s_.line_length();
    parallel_for(s_.line_count(), [&](std::size_t b, std::size_t e) {
      for (std::size_t l = b; l < e; ++l) {
        const double* u = &a_[l * W_ + 1];
        double* o = &b_[l * W_ + 1];
        const double tcoef = ctt * r2_[l];
        const double diag = 1.0 - 2.0 * A * cxy - 2.0 * tcoef;
        for (std::size_t k = 0; k < L; ++k) o[k] = diag * u[k] + tcoef * (u[k + 1] + u[k - 1]);
        for (int a = 0; a < A; ++a) {
          const double* m = &a_[neighbors_[(l * A + a) * 2] * W_ + 1];
          const double* p = &a_[neighbors_[(l * A + a) * 2 + 1] * W_ + 1];
          // mixed term: +4 x_i d_{y_i} d_tau for a = n+i, -4 y_i d_{x_i} d_tau for a = i
          const double w = a >= n ? cmix * coords_[l * A + (a - n)] : -cmix * coords_[l * A + a + n];
          for (std::size_t k = 0; k < L; ++k) {
            o[k] += cxy * (p[k] + m[k]) + w * ((p[k + 1] - p[k - 1]) - (m[k + 1] - m[k - 1]));
          }
        }
      }
    });
    std::swap(a_, b_);
  }

 private:
  GridSpec s_;
  std::size_t W_;
  std::vector<double> a_, b_;
  std::vector<std::size_t> neighbors_;
  std::vector<double> r2_, coords_;
};

}  // namespace detail

/// Number of forward Euler substeps used by the fd backend for time t.
inline long fd_substeps(const GridSpec& s, double t, double safety = 1.0) {
  const double bound = fd_stability_bound(s) * safety;
  if (!(bound > 0.0)) throw std::invalid_argument("fd_substeps: stability bound unsatisfiable");
  return std::max(1L, static_cast<long>(std::ceil(t / bound - 1e-12)));
}

inline GridField apply_semigroup(const GridField& f, double t, const SemigroupBackend& backend) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("apply_semigroup: t must be >= 0");
  if (t == 0.0) return f;
  if (backend.kind == SemigroupBackend::Kind::kernel_convolution) {
    // the sampled kernel must resolve its own width, sqrt(t) in xy and t in tau
    if (f.spec.h_xy() > std::sqrt(t) || f.spec.h_tau() > 4.0 * t) {
      throw std::invalid_argument("apply_semigroup: kernel at t=" + std::to_string(t) +
                                  " is under-resolved on this grid; use fd_stepping or refine");
    }
    auto& c = *backend.cache;
    if (!(c.t == t && c.spec == f.spec && c.kernel.size() == f.size())) {
      c.kernel = sample_kernel(t, f.spec, backend.quadrature).field;
      c.t = t;
      c.spec = f.spec;
    }
    return heisenberg_convolve(f, c.kernel, backend.kernel_threshold);
  }
  const long steps = fd_substeps(f.spec, t, backend.fd_safety);
  detail::FdStepper stepper(f.spec);
  stepper.load(f);
  for (long k = 0; k < steps; ++k) stepper.step(t / steps);
  GridField u(f.spec);
  stepper.store(u);
  return u;
}

/// max |h_t * h_s - h_{t+s}| over the grid.
inline double semigroup_defect(double t, double s, const GridSpec& spec, const KernelQuadrature& q = {}) {
  detail::require_positive_time(t, "semigroup_defect");
  detail::require_positive_time(s, "semigroup_defect");
  const GridField ht = sample_kernel(t, spec, q).field;
  const GridField hs = sample_kernel(s, spec, q).field;
  const GridField hts = sample_kernel(t + s, spec, q).field;
  return (heisenberg_convolve(ht, hs) - hts).sup_norm();
}

/// S(t) f evaluated on an arbitrary output grid by summing f against exact
/// kernel values h_t(zeta^{-1} o eta). The lambda integral is carried through
/// the tau sums, so no interpolation is involved.
inline GridField semigroup_to_grid(const GridField& f, double t, const GridSpec& out_spec,
                                   const KernelQuadrature& q = {}) {
  detail::require_positive_time(t, "semigroup_to_grid");
  out_spec.validate();
  const GridSpec& in = f.spec;
  if (in.n != out_spec.n) throw std::invalid_argument("semigroup_to_grid: dimension mismatch");
  const int n = in.n;
  const int A = in.xy_axes();
  const double max_tau = out_spec.half_width_tau + in.half_width_tau +
                         2.0 * n * out_spec.half_width_xy * in.half_width_xy * 2.0;
  const auto rule = detail::make_folded_rule(q, t, max_tau);
  const std::size_t M = rule.lambda.size();
  using cplx = std::complex<double>;

  std::vector<double> log_ratio(M), coth(M);
  for (std::size_t j = 0; j < M; ++j) {
    const double a0 = detail::kernel_amplitude(rule.lambda[j], 0.0, t, 1);
    log_ratio[j] = std::log(a0);
    const double x = t * rule.lambda[j];
    coth[j] = x < 1e-4 ? (1.0 + x * x / 3.0) / t : rule.lambda[j] / std::tanh(x);
  }

  // tau transforms of the input lines
  struct InLine {
    std::vector<double> z;
    std::vector<cplx> hat;
  };
  std::vector<InLine> lines;
  std::vector<int> idx(A);
  const std::size_t Li = in.line_length();
  for (std::size_t l = 0; l < in.line_count(); ++l) {
    const auto v = f.line(l);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) continue;
    InLine il;
    in.line_indices(l, idx);
    il.z.resize(A);
    for (int a = 0; a < A; ++a) il.z[a] = in.xy_coord(idx[a]);
    il.hat.assign(M, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < Li; ++k) {
      if (v[k] == 0.0) continue;
      const double tau = in.tau_coord(static_cast<int>(k));
      for (std::size_t j = 0; j < M; ++j) {
        const double ph = -0.25 * rule.lambda[j] * tau;
        il.hat[j] += v[k] * cplx(std::cos(ph), std::sin(ph));
      }
    }
    lines.push_back(std::move(il));
  }

  const std::size_t Lo = out_spec.line_length();
  std::vector<double> cos_t(Lo * M), sin_t(Lo * M);
  for (std::size_t k = 0; k < Lo; ++k) {
    const double tau = out_spec.tau_coord(static_cast<int>(k));
    for (std::size_t j = 0; j < M; ++j) {
      cos_t[k * M + j] = std::cos(0.25 * rule.lambda[j] * tau);
      sin_t[k * M + j] = std::sin(0.25 * rule.lambda[j] * tau);
    }
  }

  GridField out(out_spec);
  const double scale = kernel_constant(n) * in.cell_volume();
  parallel_for(out_spec.line_count(), [&](std::size_t b, std::size_t e) {
    std::vector<int> oidx(A);
    std::vector<double> ze(A);
    std::vector<cplx> G(M);
    for (std::size_t lo = b; lo < e; ++lo) {
      out_spec.line_indices(lo, oidx);
      for (int a = 0; a < A; ++a) ze[a] = out_spec.xy_coord(oidx[a]);
      std::fill(G.begin(), G.end(), cplx(0.0, 0.0));
      for (const auto& il : lines) {
        double s = 0.0, symp = 0.0;
        for (int a = 0; a < A; ++a) s += (ze[a] - il.z[a]) * (ze[a] - il.z[a]);
        for (int i = 0; i < n; ++i) symp += ze[i] * il.z[n + i] - il.z[i] * ze[n + i];
        const double phi = 2.0 * symp;
        // log amplitude decreases in lambda; stop once it is 46 e-folds down
        const double la0 = n * log_ratio[0] - 0.25 * s * coth[0];
        for (std::size_t j = 0; j < M; ++j) {
          const double la = n * log_ratio[j] - 0.25 * s * coth[j];
          if (la < la0 - 46.0) break;
          const double ph = 0.25 * rule.lambda[j] * phi;
          G[j] += rule.weight[j] * std::exp(la) * cplx(std::cos(ph), std::sin(ph)) * il.hat[j];
        }
      }
      auto o = out.line(lo);
      for (std::size_t k = 0; k < Lo; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
          acc += G[j].real() * cos_t[k * M + j] - G[j].imag() * sin_t[k * M + j];
        }
        o[k] = scale * acc;
      }
    }
  });
  return out;
}

struct DecayFit {
  double slope = 0.0;
  double theoretical = 0.0;
  std::vector<double> times;
  std::vector<double> norms;
};

struct DecayFitOptions {
  int out_points_xy = 33;
  int out_points_tau = 49;
  KernelQuadrature quadrature{};
};

/// Output box for S(t) f: the input box widened by the kernel's spread.
inline GridSpec decay_output_box(const GridSpec& in, double t, const DecayFitOptions& opt) {
  const double rt = std::sqrt(t);
  GridSpec s;
  s.n = in.n;
  s.half_width_xy = in.half_width_xy + 9.0 * rt;
  s.half_width_tau = in.half_width_tau + 40.0 * t + 12.0 * rt * in.half_width_xy;
  s.points_per_xy_axis = opt.out_points_xy;
  s.points_per_tau_axis = opt.out_points_tau;
  return s;
}

/// Least-squares slope of log ||S(t) f||_q against log t, next to the
/// exponent -(Q/2)(1/p - 1/q).
inline DecayFit lp_lq_decay_fit(const GridField& f, double p, double qexp,
                                const std::vector<double>& times, const DecayFitOptions& opt = {}) {
  if (!(p >= 1.0) || !(qexp >= p)) throw std::invalid_argument("lp_lq_decay_fit: need 1 <= p <= q");
  if (times.size() < 2 || !std::is_sorted(times.begin(), times.end()) ||
      std::adjacent_find(times.begin(), times.end()) != times.end()) {
    throw std::invalid_argument("lp_lq_decay_fit: times must be strictly increasing");
  }
  if (!(times.front() > 0.0) || times.back() / times.front() < 10.0 - 1e-12) {
    throw std::invalid_argument("lp_lq_decay_fit: times must be positive and span a decade");
  }
  const int Q = homogeneous_dimension(f.spec.n);
  DecayFit fit;
  const double inv_q = std::isinf(qexp) ? 0.0 : 1.0 / qexp;
  fit.theoretical = -0.5 * Q * (1.0 / p - inv_q);
  fit.times = times;
  for (double t : times) {
    const GridField u = semigroup_to_grid(f, t, decay_output_box(f.spec, t, opt), opt.quadrature);
    const double nq = lp_norm(u, qexp);
    if (!std::isfinite(nq) || nq < 1e-290) {
      throw std::runtime_error("lp_lq_decay_fit: norm underflow at t=" + std::to_string(t) +
                               "; the field left the box, enlarge it");
    }
    fit.norms.push_back(nq);
  }
  const double m = static_cast<double>(times.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    mx += std::log(times[i]) / m;
    my += std::log(fit.norms[i]) / m;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dx = std::log(times[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(fit.norms[i]) - my);
  }
  fit.slope = sxy / sxx;
  return fit;
}

}  // namespace heisenlab
