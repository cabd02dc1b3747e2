#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "heisenlab/mild_solver.hpp"
#include "heisenlab/parallel.hpp"

using namespace heisenlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SolveConfig small_config() {
  SolveConfig c;
  c.grid = GridSpec{1, 6.0, 24.0, 17, 17};
  c.t_end = 1.0;
  c.time_step = 0.05;
  return c;
}

// u' = v, v' = u^p, u(0) = a, v(0) = 0 by classical RK4: the gamma = 0 problem
// for spatially constant data.
double ode_reference(double a, double p, double T, int steps) {
  double u = a, v = 0.0;
  const double h = T / steps;
  auto fu = [](double, double vv) { return vv; };
  auto fv = [p](double uu, double) { return std::pow(uu, p); };
  for (int k = 0; k < steps; ++k) {
    const double k1u = fu(u, v), k1v = fv(u, v);
    const double k2u = fu(u + 0.5 * h * k1u, v + 0.5 * h * k1v), k2v = fv(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    const double k3u = fu(u + 0.5 * h * k2u, v + 0.5 * h * k2v), k3v = fv(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    const double k4u = fu(u + h * k3u, v + h * k3v), k4v = fv(u + h * k3u, v + h * k3v);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return u;
}

// The solver's time recurrence with the semigroup replaced by the identity.
double scalar_scheme(double a, double p, double gamma, double T, int steps) {
  const FracScheme s(gamma, T / steps, steps);
  std::vector<double> pw;
  double u = a;
  for (int k = 0; k < steps; ++k) {
    const double F = k > 0 ? memory_term(pw, s, k) : 0.0;
    pw.push_back(std::pow(u, p));
    u += s.time_step * F;
  }
  return u;
}

}  // namespace

TEST_CASE("profiles") {
  for (auto p : {InitialData::Profile::koranyi_gaussian, InitialData::Profile::plateau,
                 InitialData::Profile::power_decay, InitialData::Profile::file, InitialData::Profile::zero}) {
    CHECK(parse_profile(profile_name(p)) == p);
  }
  CHECK_THROWS_AS(parse_profile("box"), std::invalid_argument);
  InitialData d;
  d.amplitude = 2.0;
  CHECK(profile_value(d, GroupPoint::identity(1)) == 2.0);
  CHECK_THAT(profile_value(d, GroupPoint::h1(0.0, 0.0, 1.0)), WithinRel(2.0 * std::exp(-1.0), 1e-15));
  d.profile = InitialData::Profile::power_decay;
  d.kappa = 2.0;
  CHECK_THAT(profile_value(d, GroupPoint::h1(1.0, 0.0, 0.0)), WithinRel(0.5, 1e-15));
  d.profile = InitialData::Profile::plateau;
  CHECK(profile_value(d, GroupPoint::h1(0.5, 0.0, 0.0)) == 2.0);
  CHECK(profile_value(d, GroupPoint::h1(3.0, 0.0, 0.0)) == 0.0);
}

TEST_CASE("file profile round trip and grid check") {
  SolveConfig c = small_config();
  const auto path = (std::filesystem::temp_directory_path() / "heisenlab_u0.hhg").string();
  save_field(path, initial_field(c));
  SolveConfig f = c;
  f.initial.profile = InitialData::Profile::file;
  f.initial.path = path;
  f.initial.amplitude = 0.5;
  CHECK((initial_field(f) - 0.5 * initial_field(c)).sup_norm() == 0.0);
  f.grid.points_per_tau_axis = 19;
  CHECK_THROWS_AS(initial_field(f), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("scalar recurrence converges to the ODE at first order") {
  const double ref = ode_reference(1.0, 2.0, 1.0, 20000);
  const double e1 = std::abs(scalar_scheme(1.0, 2.0, 0.0, 1.0, 200) - ref);
  const double e2 = std::abs(scalar_scheme(1.0, 2.0, 0.0, 1.0, 400) - ref);
  CHECK(e2 <= 5e-3 * ref);
  CHECK(e1 / e2 >= 1.8);
  CHECK(e1 / e2 <= 2.2);
}

TEST_CASE("zero data stays zero") {
  SolveConfig c = small_config();
  c.initial.amplitude = 0.0;
  const SolveResult r = solve(c);
  CHECK(r.status == SolveResult::Status::completed);
  CHECK(r.times.size() == static_cast<std::size_t>(c.steps() + 1));
  for (double v : r.sup_norms) CHECK(v == 0.0);
}

TEST_CASE("solver steps follow the mild recurrence") {
  SolveConfig c = small_config();
  c.t_end = 0.3;
  MildSolver s(c);
  const FracScheme sch(c.gamma, c.time_step, c.steps() + 1);
  std::vector<GridField> pw;
  GridField u = initial_field(c);
  for (int k = 0; k < c.steps(); ++k) {
    GridField rhs = u;
    if (k > 0) rhs += c.time_step * memory_term(pw, sch, k);
    pw.push_back(s.power(u));
    u = apply_semigroup(rhs, c.time_step, c.backend);
    REQUIRE(s.step());
    CHECK((s.state() - u).sup_norm() <= 1e-14);
  }
  CHECK(s.index() == c.steps());
}

TEST_CASE("without the nonlinearity the solver is the heat flow") {
  SolveConfig c = small_config();
  c.disable_nonlinearity = true;
  c.t_end = 0.2;
  const SolveResult r = solve(c);
  GridField u = initial_field(c);
  for (int k = 0; k < c.steps(); ++k) u = apply_semigroup(u, c.time_step, c.backend);
  CHECK((r.final_field - u).sup_norm() == 0.0);
  for (std::size_t i = 1; i < r.sup_norms.size(); ++i) CHECK(r.sup_norms[i] <= r.sup_norms[i - 1]);
}

TEST_CASE("subcritical data blows up, monitors hold") {
  SolveConfig c = small_config();
  c.grid = GridSpec{1, 8.0, 40.0, 24, 24};
  c.t_end = 40.0;
  c.time_step = 0.1;
  const SolveResult r = solve(c);
  CHECK(r.status == SolveResult::Status::blowup_detected);
  CHECK(std::isfinite(r.t_est));
  CHECK(r.positivity_ok);
  CHECK(r.window_ok);
  CHECK(r.window_max_ratio <= 2.2);
  CHECK(r.moment_ok);
  CHECK(r.sup_norms.back() >= c.blowup_threshold);
}

TEST_CASE("observer, snapshots and trace") {
  SolveConfig c = small_config();
  c.t_end = 0.5;
  c.snapshot_times = {0.25};
  int calls = 0;
  c.observer = [&](int, double, const GridField&) { ++calls; };
  const SolveResult r = solve(c);
  CHECK(calls == c.steps() + 1);
  REQUIRE(r.snapshots.size() == 1);
  CHECK_THAT(r.snapshots[0].first, WithinAbs(0.25, 1e-12));
  std::ostringstream os;
  write_trace_csv(os, r, c.q_norm);
  const std::string s = os.str();
  CHECK(s.rfind("t,sup_norm,l1_norm,l2_norm,lq_norm,q,min_value,moment_f,moment_residual\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(r.times.size() + 1));
}

TEST_CASE("results do not depend on the worker count") {
  SolveConfig c = small_config();
  c.t_end = 0.5;
  set_jobs(1);
  const SolveResult a = solve(c);
  set_jobs(3);
  const SolveResult b = solve(c);
  set_jobs(1);
  CHECK(a.final_field.values == b.final_field.values);
  REQUIRE(a.moment_residual.size() == b.moment_residual.size());
  CHECK(std::memcmp(a.moment_residual.data(), b.moment_residual.data(), a.moment_residual.size() * sizeof(double)) == 0);
}

TEST_CASE("configuration errors") {
  SolveConfig c = small_config();
  c.p = 1.0;
  CHECK_THROWS_AS(solve(c), std::invalid_argument);
  c = small_config();
  c.gamma = 1.0;
  CHECK_THROWS_AS(solve(c), std::invalid_argument);
  c = small_config();
  c.time_step = 0.0;
  CHECK_THROWS_AS(solve(c), std::invalid_argument);
  c = small_config();
  c.blowup_threshold = 2.0;
  CHECK_THROWS_AS(solve(c), std::invalid_argument);
  c = small_config();
  c.memory_cap_bytes = 1024;
  CHECK_THROWS_AS(solve(c), std::invalid_argument);
  CHECK(std::isinf(local_window(2.0, 0.5, 0.0)));
  CHECK_THAT(local_window(2.0, 0.5, 1.0), WithinRel(std::pow(0.75 / 4.0, 1.0 / 1.5), 1e-14));
}
