// heisenlab command-line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "heisenlab/analysis.hpp"

namespace fs = std::filesystem;
using namespace heisenlab;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

LabConfig load(const Globals& g) {
  LabConfig c = g.config.empty() ? LabConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  c.solve.backend.quadrature = c.quadrature;
  return c;
}

fs::path out_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void tee(const fs::path& p, const std::string& text) {
  open_out(p) << text;
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat flow with memory on the Heisenberg group: solver, scans and verifiers"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for randomized property checks");
  app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)")->capture_default_str();

  // exponents
  auto* ex = app.add_subcommand("exponents", "critical and lifespan exponents");
  int ex_n = 1;
  double ex_gamma = 0.5, ex_p = 2.0;
  std::optional<double> ex_kappa;
  ex->add_option("--n", ex_n)->capture_default_str();
  ex->add_option("--gamma", ex_gamma)->capture_default_str();
  ex->add_option("--p", ex_p)->capture_default_str();
  ex->add_option("--kappa", ex_kappa);

  // kernel
  auto* ke = app.add_subcommand("kernel", "sample h_t on a grid and check mass, positivity, scaling, symmetry");
  std::optional<double> ke_t, ke_lxy, ke_lt;
  int ke_nxy = 65, ke_nt = 97;
  ke->add_option("--t", ke_t, "time (default: kernel_t from config)");
  ke->add_option("--points-xy", ke_nxy)->capture_default_str();
  ke->add_option("--points-tau", ke_nt)->capture_default_str();
  ke->add_option("--half-width-xy", ke_lxy, "default 9 sqrt(t)");
  ke->add_option("--half-width-tau", ke_lt, "default 40 t");

  // solve
  auto* so = app.add_subcommand("solve", "run one simulation from the configuration");
  bool so_final = false;
  so->add_flag("--save-final", so_final, "also write the final field as final.hhg");

  // scan-dichotomy
  auto* sd = app.add_subcommand("scan-dichotomy", "solve over p_list x amplitude_list");
  std::vector<double> sd_p, sd_a;
  sd->add_option("--p-list", sd_p, "overrides p_list")->delimiter(',');
  sd->add_option("--amplitude-list", sd_a, "overrides amplitude_list")->delimiter(',');

  // scan-lifespan
  auto* sl = app.add_subcommand("scan-lifespan", "lifespan ladder over eps_list and slope fit");
  std::string sl_profile = "integrable";
  std::vector<double> sl_eps;
  sl->add_option("--profile", sl_profile, "integrable | power_decay")
      ->check(CLI::IsMember({"integrable", "power_decay"}))
      ->capture_default_str();
  sl->add_option("--eps-list", sl_eps, "overrides eps_list")->delimiter(',');

  // verify-cutoff
  auto* vc = app.add_subcommand("verify-cutoff", "test-function lemma constant for several R");
  std::vector<double> vc_R;
  double vc_p = 1.5, vc_cells = 20.0;
  bool vc_fixed = false;
  vc->add_option("--R", vc_R, "overrides cutoff_R")->delimiter(',');
  vc->add_option("--p", vc_p)->capture_default_str();
  vc->add_option("--cells", vc_cells, "cells across the transition annulus")->capture_default_str();
  vc->add_flag("--fixed-grid", vc_fixed, "evaluate every R on the single configured grid");

  // verify-all
  auto* va = app.add_subcommand("verify-all", "run the invariant suite");

  CLI11_PARSE(app, argc, argv);

  try {
    set_jobs(g.jobs);
    LabConfig cfg = load(g);

    if (*ex) {
      const auto r = exponents(ex_n, ex_gamma, ex_p, ex_kappa);
      tee(out_file(g, "exponents.txt"), r.to_text());
      return 0;
    }

    if (*ke) {
      const double t = ke_t.value_or(cfg.kernel_t);
      const GridSpec spec{cfg.solve.grid.n, ke_lxy.value_or(9.0 * std::sqrt(t)), ke_lt.value_or(40.0 * t), ke_nxy,
                          ke_nt};
      const auto k = sample_kernel(t, spec, cfg.quadrature);
      save_field(out_file(g, "kernel.hhg").string(), k.field);
      std::ostringstream os;
      os << std::setprecision(10);
      os << "t = " << t << "\nmass = " << trapezoid_integral(k.field) << "\npeak = " << k.field.max_value()
         << "\nclamped_points = " << k.clamped_points << "\nmost_negative = " << k.most_negative << '\n';
      const GroupPoint e = GroupPoint::identity(spec.n);
      GroupPoint a = e;
      a.x[0] = 0.3 * std::sqrt(t);
      a.y[0] = -0.2 * std::sqrt(t);
      a.tau = 0.5 * t;
      const double h = kernel_value(a, t, cfg.quadrature);
      const double Q = homogeneous_dimension(spec.n);
      os << "scaling_error_r2 = "
         << std::abs(kernel_value(dilate(a, 2.0), 4.0 * t, cfg.quadrature) - std::pow(2.0, -Q) * h) / h
         << "\nsymmetry_error = " << std::abs(kernel_value(group_inverse(a), t, cfg.quadrature) - h) / h << '\n';
      tee(out_file(g, "kernel_report.txt"), os.str());
      return 0;
    }

    if (*so) {
      const SolveResult r = solve(cfg.solve);
      {
        auto os = open_out(out_file(g, "trace.csv"));
        write_trace_csv(os, r, cfg.solve.q_norm);
      }
      std::ostringstream s;
      write_summary(s, r, cfg.solve);
      tee(out_file(g, "summary.txt"), s.str());
      for (const auto& [t, f] : r.snapshots) {
        save_field(out_file(g, "snapshot_t" + format_double(t) + ".hhg").string(), f);
      }
      if (so_final) save_field(out_file(g, "final.hhg").string(), r.final_field);
      return 0;
    }

    if (*sd) {
      if (!sd_p.empty()) cfg.p_list = sd_p;
      if (!sd_a.empty()) cfg.amplitude_list = sd_a;
      const fs::path cells = out_file(g, "dichotomy_cells");
      fs::create_directories(cells);
      const auto r = scan_dichotomy(cfg.solve.grid.n, cfg.solve.gamma, cfg.p_list, cfg.amplitude_list, cfg.solve,
                                    jobs(), cells.string());
      std::ostringstream s;
      write_dichotomy_csv(s, r);
      tee(out_file(g, "dichotomy.csv"), s.str());
      return 0;
    }

    if (*sl) {
      if (!sl_eps.empty()) cfg.eps_list = sl_eps;
      const fs::path cells = out_file(g, "lifespan_cells");
      fs::create_directories(cells);
      const auto prof = sl_profile == "power_decay" ? LifespanProfile::power_decay : LifespanProfile::integrable;
      const auto r = scan_lifespan(cfg.solve.grid.n, cfg.solve.gamma, cfg.solve.p, cfg.eps_list, prof,
                                   cfg.solve.initial.kappa, cfg.solve, jobs(), cells.string());
      std::ostringstream s, f;
      write_lifespan_csv(s, r);
      write_lifespan_fit_csv(f, r);
      open_out(out_file(g, "lifespan.csv")) << s.str();
      tee(out_file(g, "lifespan_fit.csv"), f.str());
      return 0;
    }

    if (*vc) {
      if (!vc_R.empty()) cfg.cutoff_R = vc_R;
      const auto r = vc_fixed ? verify_cutoff(cfg.cutoff_R, vc_p, cfg.solve.grid)
                              : verify_cutoff_scaled(cfg.cutoff_R, vc_p, vc_cells, cfg.solve.grid.n);
      std::ostringstream s;
      s << "R,C_hat,inner_max,outer_max\n";
      for (std::size_t i = 0; i < r.R.size(); ++i) {
        s << format_double(r.R[i]) << ',' << format_double(r.C_hat[i]) << ',' << format_double(r.inner_max[i])
          << ',' << format_double(r.outer_max[i]) << '\n';
      }
      tee(out_file(g, "cutoff.csv"), s.str());
      std::cout << "spread = " << format_double(r.spread) << (r.bounded ? " (bounded)\n" : " (not bounded)\n");
      return r.bounded ? 0 : 1;
    }

    if (*va) {
      const auto rep = verify_all(cfg);
      tee(out_file(g, "verify_all.txt"), rep.text(cfg.seed));
      return rep.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
