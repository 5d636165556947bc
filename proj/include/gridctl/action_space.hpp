#ifndef GRIDCTL_ACTION_SPACE_HPP_
#define GRIDCTL_ACTION_SPACE_HPP_

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/grid_model.hpp"

namespace gridctl {

enum class ActionSpaceMode { SymmetryFiltered, N1Secure };

inline std::string to_string(ActionSpaceMode m) {
  return m == ActionSpaceMode::SymmetryFiltered ? "sym" : "n1";
}

inline ActionSpaceMode parse_action_space_mode(const std::string& s) {
  if (s == "sym" || s == "symmetry_filtered") return ActionSpaceMode::SymmetryFiltered;
  if (s == "n1" || s == "n1_secure") return ActionSpaceMode::N1Secure;
  throw std::invalid_argument("unknown action-space mode '" + s + "' (expected sym or n1)");
}

// Busbar (1 or 2) per element of one substation; lines first, then injections.
using SubConfig = std::vector<std::uint8_t>;

// Validity of one canonical configuration with the first n_lines entries being
// line ends. A busbar hosting an injection must host a line; in N-1 mode every
// busbar hosts zero or at least two lines.
inline bool config_valid(const SubConfig& cfg, int n_lines, ActionSpaceMode mode) {
  int lines_on[3] = {0, 0, 0};
  int inj_on[3] = {0, 0, 0};
  for (int i = 0; i < static_cast<int>(cfg.size()); ++i) {
    if (i < n_lines)
      ++lines_on[cfg[i]];
    else
      ++inj_on[cfg[i]];
  }
  for (int b = 1; b <= 2; ++b) {
    if (inj_on[b] > 0 && lines_on[b] == 0) return false;
    if (mode == ActionSpaceMode::N1Secure && lines_on[b] == 1) return false;
  }
  return true;
}

// Exhaustive enumeration over the 2^(n-1) canonical assignments (element 0 pinned
// to busbar 1). The base configuration comes first and is always kept: it is the
// grid as built, even where a lone line would fail the N-1 rule.
inline std::vector<SubConfig> enumerate_sub_configs(int n_lines, int n_injections,
                                                    ActionSpaceMode mode) {
  if (n_lines < 1 || n_injections < 0) return {};
  const int n = n_lines + n_injections;
  if (n > 62) throw std::domain_error("substation too large to enumerate");
  std::vector<SubConfig> out;
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  SubConfig cfg(n, 1);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int i = 1; i < n; ++i) cfg[i] = static_cast<std::uint8_t>(1 + ((mask >> (i - 1)) & 1u));
    if (mask == 0 || config_valid(cfg, n_lines, mode)) out.push_back(cfg);
  }
  return out;
}

namespace closed_form {

// alpha(n) = 2^(n-1)
inline std::int64_t alpha(int n) { return std::int64_t{1} << (n - 1); }
// gamma(n') = 2^n' - 1
inline std::int64_t gamma(int n_inj) { return (std::int64_t{1} << n_inj) - 1; }
// epsilon(n', n'') = 2^n' * (n'' - [n''==2] - [n''==1])
inline std::int64_t epsilon(int n_inj, int n_lines) {
  const int d2 = n_lines == 2 ? 1 : 0;
  const int d1 = n_lines == 1 ? 1 : 0;
  return (std::int64_t{1} << n_inj) * (n_lines - d2 - d1);
}

}  // namespace closed_form

inline std::int64_t closed_form_count(int n_lines, int n_injections, ActionSpaceMode mode) {
  if (n_lines < 1) throw std::domain_error("closed-form count requires at least one line");
  if (n_injections < 0) throw std::domain_error("negative injection count");
  const int n = n_lines + n_injections;
  std::int64_t tau = closed_form::alpha(n) - closed_form::gamma(n_injections);
  if (mode == ActionSpaceMode::N1Secure) tau -= closed_form::epsilon(n_injections, n_lines);
  return tau;
}

// Either do-nothing (sub < 0) or a full busbar reassignment of one substation.
struct TopologyAction {
  int sub = -1;
  SubConfig buses;

  static TopologyAction do_nothing() { return {}; }
  bool is_do_nothing() const { return sub < 0; }
  bool operator==(const TopologyAction&) const = default;
};

struct SubstationConfig {
  int sub = 0;
  SubConfig buses;
  bool canonical() const { return !buses.empty() && buses.front() == 1; }
};

// Flat list of topological actions. A substation contributes all its valid
// configurations, base included, when it has more than one; substations whose
// only valid configuration is the base contribute nothing. This reproduces the
// published action and topology counts of both bundled grids.
struct ActionSpace {
  ActionSpaceMode mode = ActionSpaceMode::N1Secure;
  std::vector<std::vector<SubConfig>> per_sub;  // valid configs per substation, base first
  std::vector<TopologyAction> actions;          // do-nothing not included
  std::vector<int> regions;                     // substations offering actions, id order
  std::vector<std::vector<int>> region_actions;  // flat indices per region

  int size() const { return static_cast<int>(actions.size()); }
  int n_regions() const { return static_cast<int>(regions.size()); }
  int region_index(int sub) const {
    for (int r = 0; r < n_regions(); ++r)
      if (regions[r] == sub) return r;
    return -1;
  }
  bool contains(const TopologyAction& a) const {
    if (a.is_do_nothing()) return true;
    if (a.sub < 0 || a.sub >= static_cast<int>(per_sub.size())) return false;
    if (per_sub[a.sub].size() < 2) return false;
    for (const auto& c : per_sub[a.sub])
      if (c == a.buses) return true;
    return false;
  }
};

inline ActionSpace build_action_space(const GridModel& grid, ActionSpaceMode mode) {
  ActionSpace space;
  space.mode = mode;
  for (const auto& s : grid.substations) {
    space.per_sub.push_back(enumerate_sub_configs(s.n_lines, s.n_injections, mode));
    const auto& configs = space.per_sub.back();
    if (configs.size() < 2) continue;
    space.regions.push_back(s.id);
    std::vector<int> idx;
    for (const auto& c : configs) {
      idx.push_back(static_cast<int>(space.actions.size()));
      space.actions.push_back({s.id, c});
    }
    space.region_actions.push_back(std::move(idx));
  }
  return space;
}

// Product over substations of their valid configuration counts (base included).
inline std::uint64_t count_global_topologies(const GridModel& grid, ActionSpaceMode mode) {
  std::uint64_t total = 1;
  for (const auto& s : grid.substations) {
    const auto n = static_cast<std::uint64_t>(
        std::max<std::size_t>(1, enumerate_sub_configs(s.n_lines, s.n_injections, mode).size()));
    if (total > std::numeric_limits<std::uint64_t>::max() / n)
      throw std::overflow_error("global topology count overflows 64 bits");
    total *= n;
  }
  return total;
}

inline json action_to_json(const GridModel& grid, const TopologyAction& a) {
  if (a.is_do_nothing()) return {{"substation", nullptr}};
  json buses = json::object();
  const auto& elems = grid.substations[a.sub].elements;
  for (std::size_t i = 0; i < elems.size(); ++i) buses[to_string(elems[i])] = a.buses[i];
  return {{"substation", a.sub}, {"buses", buses}};
}

inline json to_json(const GridModel& grid, const ActionSpace& space) {
  json j;
  j["grid"] = grid.name;
  j["mode"] = to_string(space.mode);
  j["n_actions"] = space.size();
  j["actions"] = json::array();
  for (const auto& a : space.actions) j["actions"].push_back(action_to_json(grid, a));
  return j;
}

}  // namespace gridctl

#endif  // GRIDCTL_ACTION_SPACE_HPP_
