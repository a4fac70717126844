#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace ltpi {

struct EstimandResult {
  double value = 0.0;
  std::string kind;
  std::vector<double> per_cell;  // additive contributions by covariate cell
};

struct BoundsResult {
  double lower = 0.0;
  double upper = 0.0;
  bool informative = false;
  std::string status = "optimal";
  std::map<std::string, double> components;
  std::vector<std::string> binding_constraints;
  std::size_t profiling_points_used = 0;
  std::size_t feasible_samples = 0;
};

// Strict width rule shared by every bound.
inline bool is_informative(double lower, double upper) { return upper - lower < 1.0 - 1e-12; }

inline nlohmann::json to_json(const EstimandResult& r) {
  return {{"kind", r.kind}, {"value", r.value}, {"per_cell", r.per_cell}};
}

inline nlohmann::json to_json(const BoundsResult& r) {
  nlohmann::json j{{"lower", r.lower},
                   {"upper", r.upper},
                   {"informative", r.informative},
                   {"status", r.status},
                   {"components", r.components}};
  if (!r.binding_constraints.empty()) j["binding_constraints"] = r.binding_constraints;
  j["profiling_points_used"] = r.profiling_points_used;
  if (r.feasible_samples) j["feasible_samples"] = r.feasible_samples;
  return j;
}

}  // namespace ltpi
