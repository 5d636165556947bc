#ifndef GRIDCTL_GRID_MODEL_HPP_
#define GRIDCTL_GRID_MODEL_HPP_

#include <compare>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace gridctl {

using json = nlohmann::json;

// All electrical quantities are in MW on a fixed 100 MVA base.
inline constexpr double kBaseMva = 100.0;

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ElementKind : std::uint8_t { LineOrigin, LineExtremity, Generator, Load };

struct ElementRef {
  ElementKind kind;
  int id;

  bool is_line_end() const {
    return kind == ElementKind::LineOrigin || kind == ElementKind::LineExtremity;
  }
  auto operator<=>(const ElementRef&) const = default;
};

inline std::string to_string(const ElementRef& e) {
  switch (e.kind) {
    case ElementKind::LineOrigin: return "line" + std::to_string(e.id) + "-origin";
    case ElementKind::LineExtremity: return "line" + std::to_string(e.id) + "-extremity";
    case ElementKind::Generator: return "gen" + std::to_string(e.id);
    case ElementKind::Load: return "load" + std::to_string(e.id);
  }
  return "?";
}

struct Substation {
  int id = 0;
  std::string name;
  // Line ends first (by line id, origin before extremity), then generators,
  // then loads. Position in this list is the element's index in BusAssignment.
  std::vector<ElementRef> elements;
  int n_lines = 0;       // n''
  int n_injections = 0;  // n'

  int n_elements() const { return static_cast<int>(elements.size()); }
};

struct PowerLine {
  int id = 0;
  int origin = 0;
  int extremity = 0;
  double x_pu = 0.0;
  double limit_mw = 0.0;
};

struct Injection {
  int id = 0;
  int sub = 0;
  double p_mw_nominal = 0.0;
};

// Where an element sits: substation id and position inside that substation.
struct ElementSlot {
  int sub = -1;
  int pos = -1;
};

// Per substation, busbar (1 or 2) of each element in Substation::elements order.
using BusAssignment = std::vector<std::vector<std::uint8_t>>;

// Static grid description. Immutable after load_grid; mutable line state lives
// in the environment.
struct GridModel {
  std::string name;
  std::vector<Substation> substations;
  std::vector<PowerLine> lines;
  std::vector<Injection> generators;
  std::vector<Injection> loads;
  int steps_per_day = 288;
  int scenario_length = 2016;  // steps per generated scenario
  std::vector<int> attackable_lines;

  std::vector<ElementSlot> line_origin_slot;
  std::vector<ElementSlot> line_extremity_slot;
  std::vector<ElementSlot> generator_slot;
  std::vector<ElementSlot> load_slot;

  int n_subs() const { return static_cast<int>(substations.size()); }
  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_generators() const { return static_cast<int>(generators.size()); }
  int n_loads() const { return static_cast<int>(loads.size()); }
  int n_elements() const {
    int n = 0;
    for (const auto& s : substations) n += s.n_elements();
    return n;
  }
  // Generator with the largest nominal output (lowest id on ties); its bus is the slack.
  int slack_generator() const {
    int best = -1;
    for (const auto& g : generators)
      if (best < 0 || g.p_mw_nominal > generators[best].p_mw_nominal) best = g.id;
    return best;
  }
};

namespace detail {

inline void check_dense_ids(const json& arr, const char* what) {
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].contains("id") && arr[i]["id"].get<int>() != static_cast<int>(i)) {
      throw GridError(std::string(what) + " " + std::to_string(i) + ": id " +
                      arr[i]["id"].dump() + " is not dense (expected " + std::to_string(i) +
                      ")");
    }
  }
}

}  // namespace detail

// Fills element lists, n''/n' counts and slot tables from lines and injections.
inline void index_elements(GridModel& g) {
  for (auto& s : g.substations) {
    s.elements.clear();
  }
  g.line_origin_slot.assign(g.lines.size(), {});
  g.line_extremity_slot.assign(g.lines.size(), {});
  g.generator_slot.assign(g.generators.size(), {});
  g.load_slot.assign(g.loads.size(), {});
  auto push = [&](int sub, ElementRef ref, ElementSlot& slot) {
    auto& elems = g.substations[sub].elements;
    slot = {sub, static_cast<int>(elems.size())};
    elems.push_back(ref);
  };
  // Lines sorted by id already, so appending keeps stable id order.
  for (auto& s : g.substations) {
    for (const auto& l : g.lines) {
      if (l.origin == s.id) push(s.id, {ElementKind::LineOrigin, l.id}, g.line_origin_slot[l.id]);
      if (l.extremity == s.id)
        push(s.id, {ElementKind::LineExtremity, l.id}, g.line_extremity_slot[l.id]);
    }
    s.n_lines = static_cast<int>(s.elements.size());
    for (const auto& gen : g.generators)
      if (gen.sub == s.id) push(s.id, {ElementKind::Generator, gen.id}, g.generator_slot[gen.id]);
    for (const auto& ld : g.loads)
      if (ld.sub == s.id) push(s.id, {ElementKind::Load, ld.id}, g.load_slot[ld.id]);
    s.n_injections = s.n_elements() - s.n_lines;
  }
}

inline void validate_grid(const GridModel& g) {
  const int n_subs = g.n_subs();
  if (n_subs == 0) throw GridError("grid has no substations");
  auto sub_ok = [&](int s) { return s >= 0 && s < n_subs; };
  for (const auto& l : g.lines) {
    if (!sub_ok(l.origin) || !sub_ok(l.extremity)) {
      throw GridError("line " + std::to_string(l.id) + ": dangling substation reference (" +
                      std::to_string(l.origin) + " -> " + std::to_string(l.extremity) + ")");
    }
    if (l.origin == l.extremity)
      throw GridError("line " + std::to_string(l.id) + ": endpoints are the same substation");
    if (!(l.x_pu > 0.0))
      throw GridError("line " + std::to_string(l.id) + ": reactance must be > 0");
    if (!(l.limit_mw > 0.0))
      throw GridError("line " + std::to_string(l.id) + ": thermal limit must be > 0");
  }
  for (const auto& gen : g.generators) {
    if (!sub_ok(gen.sub))
      throw GridError("generator " + std::to_string(gen.id) + ": dangling substation reference " +
                      std::to_string(gen.sub));
  }
  for (const auto& ld : g.loads) {
    if (!sub_ok(ld.sub))
      throw GridError("load " + std::to_string(ld.id) + ": dangling substation reference " +
                      std::to_string(ld.sub));
  }
  for (int a : g.attackable_lines)
    if (a < 0 || a >= g.n_lines()) throw GridError("attackable line " + std::to_string(a) + " does not exist");
  if (g.steps_per_day <= 0) throw GridError("steps_per_day must be positive");
  if (g.scenario_length < 2 * g.steps_per_day) throw GridError("scenario_length must cover at least two days");
}

inline GridModel grid_from_json(const json& j) {
  GridModel g;
  try {
    g.name = j.value("name", std::string("grid"));
    g.steps_per_day = j.value("steps_per_day", 288);
    g.scenario_length = j.value("scenario_length", 2016);
    const auto& subs = j.at("substations");
    detail::check_dense_ids(subs, "substation");
    for (std::size_t i = 0; i < subs.size(); ++i) {
      Substation s;
      s.id = static_cast<int>(i);
      s.name = subs[i].value("name", "sub_" + std::to_string(i));
      g.substations.push_back(std::move(s));
    }
    const auto& lines = j.at("lines");
    detail::check_dense_ids(lines, "line");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      PowerLine l;
      l.id = static_cast<int>(i);
      l.origin = lines[i].at("from").get<int>();
      l.extremity = lines[i].at("to").get<int>();
      l.x_pu = lines[i].at("x_pu").get<double>();
      l.limit_mw = lines[i].at("limit_mw").get<double>();
      g.lines.push_back(l);
    }
    auto read_injections = [](const json& arr, const char* what) {
      detail::check_dense_ids(arr, what);
      std::vector<Injection> out;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back({static_cast<int>(i), arr[i].at("sub").get<int>(),
                       arr[i].at("p_mw_nominal").get<double>()});
      }
      return out;
    };
    g.generators = read_injections(j.at("generators"), "generator");
    g.loads = read_injections(j.at("loads"), "load");
    if (j.contains("attackable_lines")) {
      for (const auto& a : j.at("attackable_lines")) {
        if (a.is_number_integer()) {
          g.attackable_lines.push_back(a.get<int>());
          continue;
        }
        // [origin, extremity] pair, resolved to the first matching line.
        const int o = a.at(0).get<int>(), e = a.at(1).get<int>();
        int found = -1;
        for (const auto& l : g.lines)
          if ((l.origin == o && l.extremity == e) || (l.origin == e && l.extremity == o)) {
            found = l.id;
            break;
          }
        if (found < 0)
          throw GridError("attackable line " + a.dump() + " matches no line");
        g.attackable_lines.push_back(found);
      }
    }
  } catch (const json::exception& e) {
    throw GridError(std::string("grid description parse error: ") + e.what());
  }
  validate_grid(g);
  index_elements(g);
  return g;
}

inline GridModel load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GridError("cannot open grid file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw GridError("grid file '" + path + "': " + e.what());
  }
  return grid_from_json(j);
}

inline json to_json(const GridModel& g) {
  json j;
  j["name"] = g.name;
  j["steps_per_day"] = g.steps_per_day;
  j["scenario_length"] = g.scenario_length;
  j["substations"] = json::array();
  for (const auto& s : g.substations) j["substations"].push_back({{"id", s.id}, {"name", s.name}});
  j["lines"] = json::array();
  for (const auto& l : g.lines)
    j["lines"].push_back(
        {{"id", l.id}, {"from", l.origin}, {"to", l.extremity}, {"x_pu", l.x_pu}, {"limit_mw", l.limit_mw}});
  auto inj = [](const std::vector<Injection>& v) {
    json a = json::array();
    for (const auto& i : v) a.push_back({{"id", i.id}, {"sub", i.sub}, {"p_mw_nominal", i.p_mw_nominal}});
    return a;
  };
  j["generators"] = inj(g.generators);
  j["loads"] = inj(g.loads);
  j["attackable_lines"] = g.attackable_lines;
  return j;
}

inline const std::vector<ElementRef>& connected_elements(const GridModel& g, int sub) {
  if (sub < 0 || sub >= g.n_subs())
    throw GridError("unknown substation id " + std::to_string(sub));
  return g.substations[sub].elements;
}

inline BusAssignment base_topology(const GridModel& g) {
  BusAssignment t;
  t.reserve(g.substations.size());
  for (const auto& s : g.substations) t.emplace_back(s.elements.size(), std::uint8_t{1});
  return t;
}

inline bool is_base(const BusAssignment& t) {
  for (const auto& sub : t)
    for (auto b : sub)
      if (b != 1) return false;
  return true;
}

}  // namespace gridctl

#endif  // GRIDCTL_GRID_MODEL_HPP_
