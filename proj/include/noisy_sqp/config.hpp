#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "noisy_sqp/solver.hpp"

namespace noisy_sqp {

/// Result of reading a SolverConfig document.
struct LoadedConfig {
  SolverConfig config;
  /// True when the document set any eps_*_est field explicitly.
  bool has_estimates = false;
};

/**
 * Reads a JSON object whose keys are SolverConfig field names. Missing keys
 * keep the values already in `base`; unknown keys are rejected.
 */
inline LoadedConfig config_from_json(const nlohmann::json& doc,
                                     SolverConfig base = {}) {
  if (!doc.is_object()) {
    throw ContractViolation("solver config must be a JSON object");
  }
  LoadedConfig out{base, false};
  SolverConfig& c = out.config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "nu") c.nu = value.get<double>();
    else if (key == "tau") c.tau = value.get<double>();
    else if (key == "beta") c.beta = value.get<double>();
    else if (key == "pi_init") c.pi_init = value.get<double>();
    else if (key == "relaxation_enabled") c.relaxation_enabled = value.get<bool>();
    else if (key == "eps_f_est") { c.eps_f_est = value.get<double>(); out.has_estimates = true; }
    else if (key == "eps_c_est") { c.eps_c_est = value.get<double>(); out.has_estimates = true; }
    else if (key == "eps_g_est") { c.eps_g_est = value.get<double>(); out.has_estimates = true; }
    else if (key == "eps_J_est") { c.eps_J_est = value.get<double>(); out.has_estimates = true; }
    else if (key == "alpha_init") c.alpha_init = value.get<double>();
    else if (key == "max_backtracks") c.max_backtracks = value.get<int>();
    else if (key == "max_iters") c.max_iters = value.get<int>();
    else if (key == "stop_on_optimality") c.stop_on_optimality = value.get<bool>();
    else if (key == "exact_tol") c.exact_tol = value.get<double>();
    else if (key == "rounding_margin") c.rounding_margin = value.get<double>();
    else throw ContractViolation("unknown solver config field '" + key + "'");
  }
  c.validate();
  return out;
}

inline LoadedConfig load_config_file(const std::string& path,
                                     SolverConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation("config file " + path + ": " + e.what());
  }
  return config_from_json(doc, base);
}

inline nlohmann::json config_to_json(const SolverConfig& c) {
  return {{"nu", c.nu},
          {"tau", c.tau},
          {"beta", c.beta},
          {"pi_init", c.pi_init},
          {"relaxation_enabled", c.relaxation_enabled},
          {"eps_f_est", c.eps_f_est},
          {"eps_c_est", c.eps_c_est},
          {"eps_g_est", c.eps_g_est},
          {"eps_J_est", c.eps_J_est},
          {"alpha_init", c.alpha_init},
          {"max_backtracks", c.max_backtracks},
          {"max_iters", c.max_iters},
          {"stop_on_optimality", c.stop_on_optimality},
          {"exact_tol", c.exact_tol},
          {"rounding_margin", c.rounding_margin}};
}

}  // namespace noisy_sqp
