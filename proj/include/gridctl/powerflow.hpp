#ifndef GRIDCTL_POWERFLOW_HPP_
#define GRIDCTL_POWERFLOW_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridctl/grid_model.hpp"

namespace gridctl {

struct LineStatus {
  bool connected = true;
  int cooldown_remaining = 0;
  int attack_remaining = 0;
  int overflow_counter = 0;
};

struct Branch {
  int line = 0;
  int from_bus = 0;
  int to_bus = 0;
  double susceptance = 0.0;  // 1 / x, per unit
};

// One bus per non-empty busbar. Buses are numbered in (substation, busbar) order.
struct ElectricalBusGraph {
  int n_buses = 0;
  std::vector<double> injection_mw;  // generation positive, load negative
  std::vector<Branch> branches;
  std::vector<int> bus_sub;
  std::vector<int> bus_busbar;
  std::vector<int> generator_bus;
  std::vector<int> load_bus;
  int slack_bus = -1;
  int slack_generator = -1;
};

enum class SolveStatus { Ok, Islanded, SolverFailure };

struct FlowResult {
  SolveStatus status = SolveStatus::Ok;
  std::vector<double> p_origin;     // MW, per line
  std::vector<double> p_extremity;  // MW, per line
  std::vector<double> theta;        // rad, per bus (0 off the main component)
  std::vector<char> in_main;        // per bus
  std::vector<double> bus_injection_mw;  // after slack balancing, per bus
  double slack_adjustment_mw = 0.0;
  bool islanded_injection = false;

  bool solved() const { return status != SolveStatus::SolverFailure; }
};

inline ElectricalBusGraph electrical_buses(const GridModel& grid, const BusAssignment& topology,
                                           std::span<const LineStatus> status,
                                           std::span<const double> gen_mw,
                                           std::span<const double> load_mw) {
  ElectricalBusGraph g;
  // bus_id[sub][busbar-1]
  std::vector<std::array<int, 2>> bus_id(grid.n_subs(), {-1, -1});
  std::vector<std::array<char, 2>> used(grid.n_subs(), {0, 0});
  auto mark = [&](const ElementSlot& s) { used[s.sub][topology[s.sub][s.pos] - 1] = 1; };
  for (const auto& l : grid.lines) {
    if (!status[l.id].connected) continue;
    mark(grid.line_origin_slot[l.id]);
    mark(grid.line_extremity_slot[l.id]);
  }
  for (const auto& s : grid.generator_slot) mark(s);
  for (const auto& s : grid.load_slot) mark(s);
  for (int s = 0; s < grid.n_subs(); ++s) {
    for (int b = 0; b < 2; ++b) {
      if (!used[s][b]) continue;
      bus_id[s][b] = g.n_buses++;
      g.bus_sub.push_back(s);
      g.bus_busbar.push_back(b + 1);
    }
  }
  auto bus_of = [&](const ElementSlot& s) { return bus_id[s.sub][topology[s.sub][s.pos] - 1]; };
  g.injection_mw.assign(g.n_buses, 0.0);
  for (const auto& gen : grid.generators) {
    const int b = bus_of(grid.generator_slot[gen.id]);
    g.generator_bus.push_back(b);
    g.injection_mw[b] += gen_mw[gen.id];
  }
  for (const auto& ld : grid.loads) {
    const int b = bus_of(grid.load_slot[ld.id]);
    g.load_bus.push_back(b);
    g.injection_mw[b] -= load_mw[ld.id];
  }
  for (const auto& l : grid.lines) {
    if (!status[l.id].connected) continue;
    g.branches.push_back({l.id, bus_of(grid.line_origin_slot[l.id]),
                          bus_of(grid.line_extremity_slot[l.id]), 1.0 / l.x_pu});
  }
  g.slack_generator = grid.slack_generator();
  if (g.slack_generator >= 0) g.slack_bus = g.generator_bus[g.slack_generator];
  return g;
}

// Solves B * theta = P on the component holding the slack bus. The slack absorbs
// that component's imbalance; buses outside it are reported and left unsolved.
inline FlowResult dc_solve(const ElectricalBusGraph& g, int n_lines) {
  FlowResult r;
  r.p_origin.assign(n_lines, 0.0);
  r.p_extremity.assign(n_lines, 0.0);
  r.theta.assign(g.n_buses, 0.0);
  r.in_main.assign(g.n_buses, 0);
  r.bus_injection_mw = g.injection_mw;
  if (g.slack_bus < 0) {
    r.status = SolveStatus::SolverFailure;
    return r;
  }

  // Main component by BFS from the slack.
  std::vector<std::vector<int>> adj(g.n_buses);
  for (const auto& br : g.branches) {
    adj[br.from_bus].push_back(br.to_bus);
    adj[br.to_bus].push_back(br.from_bus);
  }
  std::vector<int> queue{g.slack_bus};
  r.in_main[g.slack_bus] = 1;
  for (std::size_t q = 0; q < queue.size(); ++q)
    for (int nb : adj[queue[q]])
      if (!r.in_main[nb]) {
        r.in_main[nb] = 1;
        queue.push_back(nb);
      }
  if (static_cast<int>(queue.size()) < g.n_buses) r.status = SolveStatus::Islanded;
  for (int b : g.generator_bus)
    if (!r.in_main[b]) r.islanded_injection = true;
  for (int b : g.load_bus)
    if (!r.in_main[b]) r.islanded_injection = true;

  double imbalance = 0.0;
  for (int b = 0; b < g.n_buses; ++b)
    if (r.in_main[b]) imbalance += g.injection_mw[b];
  r.slack_adjustment_mw = -imbalance;
  r.bus_injection_mw[g.slack_bus] -= imbalance;
  for (int b = 0; b < g.n_buses; ++b)
    if (!r.in_main[b]) r.bus_injection_mw[b] = 0.0;

  // Reduced index: main-component buses except the slack.
  std::vector<int> red(g.n_buses, -1);
  int n = 0;
  for (int b = 0; b < g.n_buses; ++b)
    if (r.in_main[b] && b != g.slack_bus) red[b] = n++;
  if (n > 0) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd P(n);
    for (int b = 0; b < g.n_buses; ++b)
      if (red[b] >= 0) P(red[b]) = r.bus_injection_mw[b] / kBaseMva;
    for (const auto& br : g.branches) {
      if (!r.in_main[br.from_bus]) continue;
      const int i = red[br.from_bus], j = red[br.to_bus];
      if (i >= 0) B(i, i) += br.susceptance;
      if (j >= 0) B(j, j) += br.susceptance;
      if (i >= 0 && j >= 0) {
        B(i, j) -= br.susceptance;
        B(j, i) -= br.susceptance;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) {
      r.status = SolveStatus::SolverFailure;
      return r;
    }
    const Eigen::VectorXd theta = llt.solve(P);
    if (!theta.allFinite()) {
      r.status = SolveStatus::SolverFailure;
      return r;
    }
    for (int b = 0; b < g.n_buses; ++b)
      if (red[b] >= 0) r.theta[b] = theta(red[b]);
  }
  for (const auto& br : g.branches) {
    if (!r.in_main[br.from_bus]) continue;
    const double f = (r.theta[br.from_bus] - r.theta[br.to_bus]) * br.susceptance * kBaseMva;
    r.p_origin[br.line] = f;
    r.p_extremity[br.line] = -f;
  }
  return r;
}

inline std::vector<double> compute_loadings(const FlowResult& flows, const GridModel& grid,
                                            std::span<const LineStatus> status) {
  std::vector<double> rho(grid.n_lines(), 0.0);
  for (const auto& l : grid.lines)
    if (status[l.id].connected) rho[l.id] = std::abs(flows.p_origin[l.id]) / l.limit_mw;
  return rho;
}

struct OverflowConfig {
  double soft_threshold = 1.0;
  double hard_threshold = 2.0;
  int max_soft_steps = 3;  // disconnect once the counter exceeds this
  int reconnect_cooldown = 10;
};

struct OverflowOutcome {
  bool any_disconnection = false;
  std::vector<int> tripped;
};

// count_soft is false for re-solves inside one timestep's cascade: those only
// apply the hard threshold so the soft counter advances once per timestep.
inline OverflowOutcome apply_overflow_rules(std::span<LineStatus> status, std::span<const double> rho,
                                            const OverflowConfig& cfg, bool count_soft = true) {
  OverflowOutcome out;
  for (std::size_t l = 0; l < status.size(); ++l) {
    auto& s = status[l];
    if (!s.connected) continue;
    bool trip = false;
    if (rho[l] >= cfg.hard_threshold) {
      trip = true;
    } else if (count_soft) {
      if (rho[l] >= cfg.soft_threshold) {
        if (++s.overflow_counter > cfg.max_soft_steps) trip = true;
      } else {
        s.overflow_counter = 0;
      }
    }
    if (trip) {
      s.connected = false;
      s.overflow_counter = 0;
      s.cooldown_remaining = cfg.reconnect_cooldown;
      out.any_disconnection = true;
      out.tripped.push_back(static_cast<int>(l));
    }
  }
  return out;
}

}  // namespace gridctl

#endif  // GRIDCTL_POWERFLOW_HPP_
