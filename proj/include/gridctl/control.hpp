#ifndef GRIDCTL_CONTROL_HPP_
#define GRIDCTL_CONTROL_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/environment.hpp"

namespace gridctl {

struct GateConfig {
  double activation_threshold = 0.95;  // agent mode when max rho >= this
  double revert_threshold = 0.90;
  double revert_start_h = 3.0;
  double revert_end_h = 6.0;
  double gamma = 0.99;
  bool night_revert = true;

  void validate() const {
    if (!(0.0 < revert_threshold && revert_threshold < activation_threshold && activation_threshold <= 1.0))
      throw std::invalid_argument("gate thresholds must satisfy 0 < revert < activation <= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  }
};

enum class GateMode { DoNothing, Agent };

inline GateMode gate(double max_rho, const GateConfig& cfg = {}) {
  return max_rho < cfg.activation_threshold ? GateMode::DoNothing : GateMode::Agent;
}
inline GateMode gate(const Observation& obs, const GateConfig& cfg = {}) { return gate(obs.max_rho(), cfg); }

enum class RunMode { Train, Eval };

// What a learner saw and did at one agent invocation.
struct PolicyStep {
  int learner = -1;
  std::vector<double> features;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  bool global_input = true;  // features are the plain environment observation
};

struct Decision {
  TopologyAction action;
  int region = -1;  // region picked by a coordinator, -1 when none
  std::vector<PolicyStep> steps;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Decision act(const Environment& env, const Observation& obs, RunMode mode) = 0;
  virtual void begin_episode() {}
};

struct SmdpTransition {
  std::vector<double> observation;
  TopologyAction action;
  double reward = 0.0;  // sum_i gamma^i r_{t+i}
  int steps = 0;        // k
  std::vector<double> next_observation;
  bool terminal = false;
  int t_start = 0;
};

struct EpisodeRecord {
  int survived = 0;
  int length = 0;
  int env_steps = 0;
  double total_reward = 0.0;
  double covered_reward = 0.0;  // reward earned while some transition was open
  int agent_calls = 0;
  int reverts = 0;
  bool blackout = false;
};

struct EpisodeResult {
  EpisodeRecord record;
  std::vector<SmdpTransition> transitions;
  std::vector<Decision> selections;  // one per transition
  std::vector<int> agent_timesteps;
  std::vector<int> revert_timesteps;
  std::vector<double> max_rho;  // per observed timestep, episode start included
};

namespace detail {

inline std::optional<TopologyAction> night_revert(const Environment& env, const GateConfig& cfg) {
  const double h = env.hour();
  if (h < cfg.revert_start_h || h >= cfg.revert_end_h) return std::nullopt;
  const auto& topo = env.topology();
  const auto& grid = env.grid();
  for (int s = 0; s < grid.n_subs(); ++s) {
    bool base = true;
    for (auto b : topo[s]) base = base && b == 1;
    if (base) continue;
    TopologyAction revert{s, SubConfig(topo[s].size(), 1)};
    const auto sim = env.simulate(revert);
    if (!sim.blackout && sim.max_rho < cfg.revert_threshold) return revert;
  }
  return std::nullopt;
}

}  // namespace detail

// Runs the gate / do-nothing / agent loop on an environment that has just been
// reset, until the episode ends. Rewards of do-nothing stretches accumulate onto
// the transition opened by the last agent invocation.
inline EpisodeResult controller_episode(Environment& env, Agent& agent, const GateConfig& cfg,
                                        RunMode mode) {
  EpisodeResult out;
  agent.begin_episode();
  Observation obs = env.observation();
  std::optional<SmdpTransition> pending;
  double discount = 1.0;
  out.max_rho.push_back(obs.max_rho());

  auto accumulate = [&](double r) {
    out.record.total_reward += r;
    if (!pending) return;
    pending->reward += discount * r;
    discount *= cfg.gamma;
    ++pending->steps;
    out.record.covered_reward += r;
  };

  while (!env.done()) {
    StepResult r;
    if (gate(obs, cfg) == GateMode::DoNothing) {
      TopologyAction action = TopologyAction::do_nothing();
      if (cfg.night_revert) {
        if (auto rev = detail::night_revert(env, cfg)) {
          action = *rev;
          ++out.record.reverts;
          out.revert_timesteps.push_back(obs.timestep);
        }
      }
      r = env.step(action);
      accumulate(r.reward);
    } else {
      if (pending) {
        pending->next_observation = obs.features;
        out.transitions.push_back(std::move(*pending));
        pending.reset();
      }
      Decision d = agent.act(env, obs, mode);
      if (!env.action_space().contains(d.action))
        throw std::runtime_error("agent returned an action outside the action space at t=" +
                                 std::to_string(obs.timestep));
      ++out.record.agent_calls;
      out.agent_timesteps.push_back(obs.timestep);
      pending = SmdpTransition{obs.features, d.action, 0.0, 0, {}, false, obs.timestep};
      discount = 1.0;
      out.selections.push_back(std::move(d));
      r = env.step(out.selections.back().action);
      accumulate(r.reward);
    }
    ++out.record.env_steps;
    obs = r.obs;
    out.max_rho.push_back(r.info.blackout ? r.info.max_rho : obs.max_rho());
    if (r.done) {
      out.record.blackout = r.info.blackout;
      out.record.survived = r.info.survived;
    }
  }
  if (pending) {
    pending->next_observation = obs.features;
    pending->terminal = true;
    out.transitions.push_back(std::move(*pending));
  }
  out.record.length = env.scenario_length();
  return out;
}

}  // namespace gridctl

#endif  // GRIDCTL_CONTROL_HPP_
