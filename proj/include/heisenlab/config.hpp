#pragma once

// key = value configuration files. Blank lines and text after '#' are
// ignored; unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heisenlab/heat_kernel.hpp"
#include "heisenlab/mild_solver.hpp"

namespace heisenlab {

struct LabConfig {
  SolveConfig solve;
  KernelQuadrature quadrature;
  double kernel_t = 1.0;
  std::vector<double> p_list{1.5, 3.0};
  std::vector<double> amplitude_list{0.01, 0.1, 1.0};
  std::vector<double> eps_list{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  std::vector<double> cutoff_R{4.0, 8.0, 16.0};
  double sigma = 6.0;
  std::uint64_t seed = 12345;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return INFINITY;
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long>(d))) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return static_cast<long>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

}  // namespace detail

/// Applies one key to the configuration.
inline void apply_config_key(LabConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  SolveConfig& s = c.solve;
  if (key == "n") s.grid.n = static_cast<int>(to_int(key, v));
  else if (key == "p") s.p = to_double(key, v);
  else if (key == "gamma") s.gamma = to_double(key, v);
  else if (key == "half_width_xy") s.grid.half_width_xy = to_double(key, v);
  else if (key == "half_width_tau") s.grid.half_width_tau = to_double(key, v);
  else if (key == "points_xy") s.grid.points_per_xy_axis = static_cast<int>(to_int(key, v));
  else if (key == "points_tau") s.grid.points_per_tau_axis = static_cast<int>(to_int(key, v));
  else if (key == "profile") s.initial.profile = parse_profile(v);
  else if (key == "amplitude") s.initial.amplitude = to_double(key, v);
  else if (key == "kappa") s.initial.kappa = to_double(key, v);
  else if (key == "initial_path") s.initial.path = v;
  else if (key == "time_step") s.time_step = to_double(key, v);
  else if (key == "t_end") s.t_end = to_double(key, v);
  else if (key == "blowup_threshold") s.blowup_threshold = to_double(key, v);
  else if (key == "backend") {
    if (v == "fd_stepping") s.backend.kind = SemigroupBackend::Kind::fd_stepping;
    else if (v == "kernel_convolution") s.backend.kind = SemigroupBackend::Kind::kernel_convolution;
    else throw std::invalid_argument("config: backend must be fd_stepping or kernel_convolution");
  } else if (key == "q_norm") s.q_norm = to_double(key, v);
  else if (key == "disable_nonlinearity") s.disable_nonlinearity = to_bool(key, v);
  else if (key == "memory_cap_mib") s.memory_cap_bytes = static_cast<std::uint64_t>(to_int(key, v)) << 20;
  else if (key == "theta_A") s.theta_A = to_double(key, v);
  else if (key == "theta_eps") s.theta_eps = to_double(key, v);
  else if (key == "positivity_tolerance") s.positivity_tolerance = to_double(key, v);
  else if (key == "monitor_positivity") s.monitors.positivity = to_bool(key, v);
  else if (key == "monitor_local_window") s.monitors.local_window = to_bool(key, v);
  else if (key == "monitor_moment") s.monitors.moment_inequality = to_bool(key, v);
  else if (key == "snapshot_times") s.snapshot_times = to_list(key, v);
  else if (key == "lambda_max") c.quadrature.lambda_max = to_double(key, v);
  else if (key == "lambda_points") c.quadrature.lambda_points = static_cast<int>(to_int(key, v));
  else if (key == "guard_aliasing") c.quadrature.guard_aliasing = to_bool(key, v);
  else if (key == "quadrature_rule") {
    if (v == "trapezoid") c.quadrature.rule = KernelQuadrature::Rule::trapezoid;
    else if (v == "gauss_legendre") c.quadrature.rule = KernelQuadrature::Rule::gauss_legendre;
    else throw std::invalid_argument("config: quadrature_rule must be trapezoid or gauss_legendre");
  } else if (key == "kernel_t") c.kernel_t = to_double(key, v);
  else if (key == "p_list") c.p_list = to_list(key, v);
  else if (key == "amplitude_list") c.amplitude_list = to_list(key, v);
  else if (key == "eps_list") c.eps_list = to_list(key, v);
  else if (key == "cutoff_R") c.cutoff_R = to_list(key, v);
  else if (key == "sigma") c.sigma = to_double(key, v);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
  else throw std::invalid_argument("config: unknown key '" + key + "'");
  s.backend.quadrature = c.quadrature;
}

inline LabConfig parse_config(std::istream& is) {
  LabConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return c;
}

inline LabConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return parse_config(is);
}

}  // namespace heisenlab
