#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisy_sqp/harness.hpp"

namespace noisy_sqp {

inline void to_json(nlohmann::json& j, const RunSummary& s) {
  j = nlohmann::json{
      {"problem", s.problem},
      {"eps1", s.eps1},
      {"eps2", s.eps2},
      {"seed", s.seed},
      {"relaxation", s.relaxation},
      {"est_multiplier", s.est_multiplier},
      {"k_max", s.k_max},
      {"status", std::string(to_string(s.status))},
      {"failure_iter", s.failure_iter ? nlohmann::json(*s.failure_iter)
                                      : nlohmann::json(nullptr)},
      {"min_dist", s.min_dist},
      {"min_dist_iter", s.min_dist_iter},
      {"iters_run", s.iters_run},
      {"termination_kind", std::string(to_string(s.termination))},
      {"final_pi", s.final_pi},
      {"pi_fixed_from", s.pi_fixed_from},
  };
}

inline std::string summaries_json(const std::string& table,
                                  const std::vector<RunSummary>& rows) {
  nlohmann::json doc;
  doc["table"] = table;
  doc["runs"] = rows;
  return doc.dump(2) + "\n";
}

/// Fixed-width table, one line per run, for terminal inspection.
inline std::string summaries_text(const std::vector<RunSummary>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %-9s %-6s %-6s %-8s %6s %6s %-10s %12s %8s %9s\n",
                "prob", "eps", "seed", "relax", "est_mult", "k_max", "iters",
                "end", "min_dist", "argmin", "pi");
  out += line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof(line),
                  "%-6s %-9.2e %-6llu %-6s %-8.0e %6d %6d %-10s %12.4e %8d %9.4g\n",
                  s.problem.c_str(), s.eps1,
                  static_cast<unsigned long long>(s.seed),
                  s.relaxation ? "on" : "off", s.est_multiplier, s.k_max,
                  s.iters_run, std::string(to_string(s.termination)).c_str(),
                  s.min_dist, s.min_dist_iter, s.final_pi);
    out += line;
  }
  return out;
}

}  // namespace noisy_sqp
