#pragma once

// Keyword algebra for selecting groups of nodes to monitor or summarise.

#include <map>
#include <set>
#include <string>
#include <vector>

namespace jointgibbs {

struct MonitorSpec {
  std::map<std::string, bool> switches;  // group or leaf keyword → on/off
  std::vector<std::string> other;        // explicit node names
};

/// Leaf keywords a node can be tagged with.
const std::vector<std::string>& monitor_leaves();

/// Group keyword → leaves it expands to.
const std::map<std::string, std::vector<std::string>>& monitor_groups();

/// Throws ConfigError for unknown keywords.
void validate(const MonitorSpec& spec);

/// Set of active leaves. A leaf switch overrides its groups; among groups an
/// active one wins. analysis_main is on unless switched off explicitly.
std::set<std::string> resolve_leaves(const MonitorSpec& spec);

/// Whether a node with the given leaf tag and name is selected.
bool selects(const MonitorSpec& spec, const std::set<std::string>& leaves, const std::string& tag,
             const std::string& name);

}  // namespace jointgibbs
