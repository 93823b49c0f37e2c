#include "jointgibbs/monitor.hpp"

#include <algorithm>

#include "jointgibbs/error.hpp"

namespace jointgibbs {

const std::vector<std::string>& monitor_leaves() {
  static const std::vector<std::string> leaves{
      "betas",     "tau_main",   "sigma_main", "gamma_main", "delta_main",  "shape_main", "D_main",
      "ranef_main", "invD_main", "RinvD_main", "alphas",     "tau_other",   "sigma_other", "gamma_other",
      "delta_other", "imps",     "ranef_other", "D_other",   "invD_other",  "RinvD_other"};
  return leaves;
}

const std::map<std::string, std::vector<std::string>>& monitor_groups() {
  static const std::map<std::string, std::vector<std::string>> groups{
      {"analysis_main", {"betas", "sigma_main", "tau_main", "gamma_main", "shape_main", "D_main"}},
      {"analysis_random", {"ranef_main", "D_main", "invD_main", "RinvD_main"}},
      {"other_models", {"alphas", "tau_other", "sigma_other", "gamma_other", "delta_other"}},
  };
  return groups;
}

void validate(const MonitorSpec& spec) {
  const auto& leaves = monitor_leaves();
  for (const auto& [key, on] : spec.switches) {
    if (monitor_groups().count(key)) continue;
    if (std::find(leaves.begin(), leaves.end(), key) != leaves.end()) continue;
    throw ConfigError("unknown monitor keyword '" + key + "'");
  }
}

std::set<std::string> resolve_leaves(const MonitorSpec& spec) {
  validate(spec);
  std::set<std::string> out;
  for (const auto& leaf : monitor_leaves()) {
    auto direct = spec.switches.find(leaf);
    if (direct != spec.switches.end()) {
      if (direct->second) out.insert(leaf);
      continue;
    }
    bool any_on = false;
    for (const auto& [group, members] : monitor_groups()) {
      if (std::find(members.begin(), members.end(), leaf) == members.end()) continue;
      auto it = spec.switches.find(group);
      bool on = it != spec.switches.end() ? it->second : group == "analysis_main";
      any_on = any_on || on;
    }
    if (any_on) out.insert(leaf);
  }
  return out;
}

bool selects(const MonitorSpec& spec, const std::set<std::string>& leaves, const std::string& tag,
             const std::string& name) {
  if (leaves.count(tag)) return true;
  return std::find(spec.other.begin(), spec.other.end(), name) != spec.other.end();
}

}  // namespace jointgibbs
