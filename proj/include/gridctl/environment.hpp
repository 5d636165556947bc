#ifndef GRIDCTL_ENVIRONMENT_HPP_
#define GRIDCTL_ENVIRONMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/action_space.hpp"
#include "gridctl/grid_model.hpp"
#include "gridctl/powerflow.hpp"
#include "gridctl/scenario.hpp"

namespace gridctl {

struct Observation {
  std::vector<double> features;
  std::vector<double> rho;
  int timestep = 0;
  double hour = 0.0;

  double max_rho() const { return rho.empty() ? 0.0 : *std::max_element(rho.begin(), rho.end()); }
};

// Feature block offsets inside Observation::features.
struct ObservationLayout {
  int topology = 0;
  int rho = 0;
  int p_origin = 0;
  int p_extremity = 0;
  int overflow = 0;
  int connected = 0;
  int generators = 0;
  int loads = 0;
  int time = 0;
  int size = 0;

  static ObservationLayout for_grid(const GridModel& g) {
    ObservationLayout l;
    int at = 0;
    l.topology = at, at += g.n_elements();
    l.rho = at, at += g.n_lines();
    l.p_origin = at, at += g.n_lines();
    l.p_extremity = at, at += g.n_lines();
    l.overflow = at, at += g.n_lines();
    l.connected = at, at += g.n_lines();
    l.generators = at, at += g.n_generators();
    l.loads = at, at += g.n_loads();
    l.time = at, at += 2;
    l.size = at;
    return l;
  }
};

struct EnvConfig {
  OverflowConfig overflow;
  bool opponent = false;
  OpponentConfig opponent_cfg;  // attackable lines default to the grid's list
  int cascade_cap = 10;
};

struct StepInfo {
  double max_rho = 0.0;
  int cascade_count = 0;
  bool blackout = false;
  bool scenario_end = false;
  int survived = 0;  // meaningful once done
  std::vector<int> tripped;
  std::optional<AttackEvent> attack;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct SimulationResult {
  double max_rho = std::numeric_limits<double>::infinity();  // +inf on blackout
  bool blackout = true;
  std::vector<double> rho;
};

// r = mean over lines of max(0, 1 - rho)^2; disconnected lines contribute 0.
inline double compute_reward(std::span<const double> rho, std::span<const LineStatus> status = {}) {
  if (rho.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t l = 0; l < rho.size(); ++l) {
    if (!status.empty() && !status[l].connected) continue;
    const double m = std::max(0.0, 1.0 - rho[l]);
    sum += m * m;
  }
  return sum / static_cast<double>(rho.size());
}

class Environment {
 public:
  Environment(const GridModel& grid, const ActionSpace& space, EnvConfig cfg = {})
      : grid_(&grid), space_(&space), cfg_(std::move(cfg)), layout_(ObservationLayout::for_grid(grid)) {
    if (cfg_.opponent_cfg.attackable.empty()) cfg_.opponent_cfg.attackable = grid.attackable_lines;
  }

  const GridModel& grid() const { return *grid_; }
  const ActionSpace& action_space() const { return *space_; }
  const EnvConfig& config() const { return cfg_; }
  const ObservationLayout& layout() const { return layout_; }
  int observation_size() const { return layout_.size; }

  Observation reset(const ScenarioData& scenario, std::uint64_t seed) {
    if (scenario.n_loads != grid_->n_loads() || scenario.n_generators != grid_->n_generators())
      throw std::invalid_argument("scenario '" + scenario.id + "' does not match grid '" + grid_->name + "'");
    if (scenario.length() < 1) throw std::invalid_argument("empty scenario");
    scenario_ = &scenario;
    rng_.seed(seed);
    topology_ = base_topology(*grid_);
    status_.assign(grid_->n_lines(), LineStatus{});
    opponent_ = OpponentState{};
    t_ = 0;
    done_ = false;
    solve();
    if (!flows_.solved() || flows_.islanded_injection)
      throw std::runtime_error("initial power flow infeasible for scenario '" + scenario.id + "'");
    obs_ = make_observation();
    return obs_;
  }

  StepResult step(const TopologyAction& action) {
    if (scenario_ == nullptr) throw std::logic_error("step() before reset()");
    if (done_) throw std::logic_error("step() on a finished episode");
    if (!space_->contains(action))
      throw std::invalid_argument("action targets substation " + std::to_string(action.sub) +
                                  " with a configuration outside the action space");
    StepResult res;
    // (1) topology
    if (!action.is_do_nothing()) topology_[action.sub] = action.buses;
    // (2) attack and cooldown counters, then the opponent
    for (auto& s : status_) {
      if (s.attack_remaining > 0) --s.attack_remaining;
      if (s.cooldown_remaining > 0) --s.cooldown_remaining;
    }
    if (cfg_.opponent) {
      if (auto ev = opponent_schedule(rng_, t_ + 1, opponent_, cfg_.opponent_cfg)) {
        auto& s = status_[ev->line];
        s.attack_remaining = ev->duration;
        s.connected = false;
        s.overflow_counter = 0;
        res.info.attack = ev;
      }
    }
    // (3) automatic reconnection
    for (auto& s : status_) {
      if (!s.connected && s.attack_remaining == 0 && s.cooldown_remaining == 0) {
        s.connected = true;
        s.overflow_counter = 0;
      }
    }
    // (4) injections
    ++t_;
    // (5) + (6) flow and cascade
    solve();
    bool failed = !flows_.solved() || flows_.islanded_injection;
    int cascades = 0;
    if (!failed) {
      auto outcome = apply_overflow_rules(status_, rho_, cfg_.overflow, true);
      while (outcome.any_disconnection) {
        res.info.tripped.insert(res.info.tripped.end(), outcome.tripped.begin(), outcome.tripped.end());
        if (++cascades > cfg_.cascade_cap) {
          failed = true;
          break;
        }
        solve();
        if (!flows_.solved() || flows_.islanded_injection) {
          failed = true;
          break;
        }
        outcome = apply_overflow_rules(status_, rho_, cfg_.overflow, false);
      }
    }
    // (7) blackout
    res.info.blackout = failed;
    res.info.cascade_count = cascades;
    res.info.max_rho = failed ? std::numeric_limits<double>::infinity() : max_rho();
    // (8) reward
    res.reward = failed ? 0.0 : compute_reward(rho_, status_);
    const bool end = t_ >= scenario_->length() - 1;
    done_ = failed || end;
    res.info.scenario_end = end && !failed;
    res.info.survived = failed ? t_ : t_ + 1;
    res.done = done_;
    // (9) observation
    if (emit_observation_) obs_ = make_observation();
    res.obs = obs_;
    if (trace_ != nullptr) {
      json rec{{"t", t_},
               {"action", action_to_json(*grid_, action)},
               {"max_rho", failed ? json(nullptr) : json(res.info.max_rho)},
               {"reward", res.reward},
               {"done", res.done}};
      *trace_ << rec.dump() << '\n';
    }
    return res;
  }

  // One-step lookahead on a copy: same next injections, no opponent draws.
  SimulationResult simulate(const TopologyAction& action) const {
    Environment copy = *this;
    copy.cfg_.opponent = false;
    copy.trace_ = nullptr;
    copy.emit_observation_ = false;
    SimulationResult out;
    const auto r = copy.step(action);
    out.blackout = r.info.blackout;
    if (!out.blackout) {
      out.max_rho = r.info.max_rho;
      out.rho = copy.rho_;
    }
    return out;
  }

  void set_trace(std::ostream* out) { trace_ = out; }

  bool done() const { return done_; }
  int timestep() const { return t_; }
  int scenario_length() const { return scenario_ ? scenario_->length() : 0; }
  double hour() const { return hour_of_day(scenario_->start_offset + t_, grid_->steps_per_day); }
  const BusAssignment& topology() const { return topology_; }
  const std::vector<LineStatus>& line_status() const { return status_; }
  const std::vector<double>& rho() const { return rho_; }
  double max_rho() const { return rho_.empty() ? 0.0 : *std::max_element(rho_.begin(), rho_.end()); }
  const ElectricalBusGraph& last_graph() const { return graph_; }
  const FlowResult& last_flows() const { return flows_; }
  const Observation& observation() const { return obs_; }
  std::vector<double> generator_output() const {
    std::vector<double> g(scenario_->gens_at(t_).begin(), scenario_->gens_at(t_).end());
    if (graph_.slack_generator >= 0) g[graph_.slack_generator] += flows_.slack_adjustment_mw;
    return g;
  }

 private:
  void solve() {
    graph_ = electrical_buses(*grid_, topology_, status_, scenario_->gens_at(t_), scenario_->loads_at(t_));
    flows_ = dc_solve(graph_, grid_->n_lines());
    rho_ = compute_loadings(flows_, *grid_, status_);
  }

  Observation make_observation() const {
    const auto& g = *grid_;
    Observation o;
    o.features.assign(layout_.size, 0.0);
    o.rho = rho_;
    o.timestep = t_;
    o.hour = hour();
    auto& f = o.features;
    int at = layout_.topology;
    for (const auto& sub : topology_)
      for (auto b : sub) f[at++] = b;
    for (const auto& l : g.lines) {
      const auto& s = status_[l.id];
      f[layout_.rho + l.id] = rho_[l.id];
      f[layout_.p_origin + l.id] = flows_.p_origin[l.id] / l.limit_mw;
      f[layout_.p_extremity + l.id] = flows_.p_extremity[l.id] / l.limit_mw;
      f[layout_.overflow + l.id] = static_cast<double>(s.overflow_counter) / cfg_.overflow.max_soft_steps;
      f[layout_.connected + l.id] = s.connected ? 1.0 : 0.0;
    }
    const auto gens = generator_output();
    for (const auto& gen : g.generators) f[layout_.generators + gen.id] = gens[gen.id] / gen.p_mw_nominal;
    const auto loads = scenario_->loads_at(t_);
    for (const auto& ld : g.loads) f[layout_.loads + ld.id] = loads[ld.id] / ld.p_mw_nominal;
    const double phase = 2.0 * std::numbers::pi * o.hour / 24.0;
    f[layout_.time] = std::sin(phase);
    f[layout_.time + 1] = std::cos(phase);
    return o;
  }

  const GridModel* grid_;
  const ActionSpace* space_;
  EnvConfig cfg_;
  ObservationLayout layout_;
  const ScenarioData* scenario_ = nullptr;
  std::mt19937_64 rng_;
  BusAssignment topology_;
  std::vector<LineStatus> status_;
  OpponentState opponent_;
  int t_ = 0;
  bool done_ = false;
  ElectricalBusGraph graph_;
  FlowResult flows_;
  std::vector<double> rho_;
  Observation obs_;
  std::ostream* trace_ = nullptr;
  bool emit_observation_ = true;
};

}  // namespace gridctl

#endif  // GRIDCTL_ENVIRONMENT_HPP_
