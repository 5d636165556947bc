#ifndef GRIDCTL_AGENTS_HPP_
#define GRIDCTL_AGENTS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/control.hpp"
#include "gridctl/environment.hpp"
#include "gridctl/learner.hpp"

namespace gridctl {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Simulated max rho of an action, +inf on blackout.
inline double simulated_max_rho(const Environment& env, const TopologyAction& a) {
  const auto s = env.simulate(a);
  return s.blackout ? kInf : s.max_rho;
}

// Index of the action minimizing sim(action), or -1 for do-nothing. Do-nothing is
// evaluated first and wins ties, then the lowest index.
template <class Sim>
int greedy_select(std::span<const TopologyAction> actions, Sim&& sim) {
  double best = sim(TopologyAction::do_nothing());
  int arg = -1;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double v = sim(actions[i]);
    if (v < best) {
      best = v;
      arg = static_cast<int>(i);
    }
  }
  return arg;
}

// Same as above against an environment; actions that leave the topology
// unchanged reuse the do-nothing simulation.
inline TopologyAction greedy_select(const Environment& env, std::span<const TopologyAction> actions) {
  const double dn = simulated_max_rho(env, TopologyAction::do_nothing());
  const auto& topo = env.topology();
  auto sim = [&](const TopologyAction& a) {
    if (a.is_do_nothing() || topo[a.sub] == a.buses) return dn;
    return simulated_max_rho(env, a);
  };
  const int i = greedy_select(actions, sim);
  return i < 0 ? TopologyAction::do_nothing() : actions[i];
}

struct Proposal {
  int region = -1;
  TopologyAction action;
  std::optional<double> value;      // critic estimate, denormalized
  std::optional<double> raw_value;  // critic output before denormalization
  std::optional<PolicyStep> step;   // set for learned proposers
};

// Best configuration of one region, do-nothing unless strictly better than it.
template <class Sim>
Proposal greedy_regional_propose(int region, std::span<const TopologyAction> configs, Sim&& sim) {
  Proposal p;
  p.region = region;
  const int i = greedy_select(configs, std::forward<Sim>(sim));
  if (i >= 0) p.action = configs[i];
  return p;
}

inline Proposal greedy_regional_propose(const Environment& env, int region) {
  const auto& space = env.action_space();
  const auto& topo = env.topology();
  std::vector<TopologyAction> configs;
  for (int idx : space.region_actions.at(region)) {
    const auto& a = space.actions[idx];
    if (topo[a.sub] != a.buses) configs.push_back(a);
  }
  const double dn = simulated_max_rho(env, TopologyAction::do_nothing());
  auto sim = [&](const TopologyAction& a) { return a.is_do_nothing() ? dn : simulated_max_rho(env, a); };
  return greedy_regional_propose(region, configs, sim);
}

// Accepts the first cheap action that is safe or cuts the peak by 5% against
// do-nothing, then samples expensive ones; otherwise the best action seen.
template <class Sim>
TopologyAction first_improvement_select(std::span<const TopologyAction> cheap,
                                        std::span<const TopologyAction> expensive, Sim&& sim, double rho_tilde,
                                        std::mt19937_64& rng) {
  const double dn = sim(TopologyAction::do_nothing());
  double best = dn;
  TopologyAction best_action = TopologyAction::do_nothing();
  auto accept = [&](const TopologyAction& a) {
    const double v = sim(a);
    if (v < best) {
      best = v;
      best_action = a;
    }
    return v < rho_tilde || (std::isfinite(dn) && v <= 0.95 * dn) || (!std::isfinite(dn) && std::isfinite(v));
  };
  for (const auto& a : cheap)
    if (accept(a)) return a;
  std::vector<std::size_t> order(expensive.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (auto i : order)
    if (accept(expensive[i])) return expensive[i];
  return best_action;
}

// Regions (indices into ActionSpace::regions) by descending max rho over the
// lines connected to their substation; ties by index.
inline std::vector<int> capa_priority_list(const GridModel& grid, const ActionSpace& space,
                                           std::span<const double> rho) {
  const int n = space.n_regions();
  std::vector<double> key(n, 0.0);
  for (int r = 0; r < n; ++r) {
    const int sub = space.regions[r];
    for (const auto& l : grid.lines)
      if (l.origin == sub || l.extremity == sub) key[r] = std::max(key[r], rho[l.id]);
  }
  std::vector<int> order(n);
  for (int r = 0; r < n; ++r) order[r] = r;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] > key[b]; });
  return order;
}

struct CoordinatorStatePriority {
  std::optional<std::vector<int>> pending;
};

struct CapaChoice {
  TopologyAction action;
  int region = -1;  // -1 when every proposal was do-nothing
};

template <class Generate>
CapaChoice ordered_capa_select(std::span<const Proposal> proposals, CoordinatorStatePriority& state,
                               Generate&& generate) {
  if (!state.pending || state.pending->empty()) state.pending = generate();
  auto& P = *state.pending;
  for (auto it = P.begin(); it != P.end(); ++it) {
    const int r = *it;
    if (r < 0 || r >= static_cast<int>(proposals.size())) throw std::out_of_range("priority list names unknown region");
    if (proposals[r].action.is_do_nothing()) continue;
    CapaChoice c{proposals[r].action, r};
    P.erase(it);
    return c;
  }
  state.pending.reset();
  return {};
}

inline std::vector<double> softmax_probs(std::span<const double> v) {
  std::vector<double> p(v.size());
  if (v.empty()) return p;
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += (p[i] = std::exp(v[i] - m));
  for (double& x : p) x /= s;
  return p;
}

inline int value_softmax_select(std::span<const Proposal> proposals, RunMode mode, std::mt19937_64& rng) {
  if (proposals.empty()) throw std::invalid_argument("value softmax over no proposals");
  std::vector<double> v;
  for (const auto& p : proposals) {
    if (!p.value) throw std::invalid_argument("proposal of region " + std::to_string(p.region) + " carries no value");
    v.push_back(*p.value);
  }
  if (mode == RunMode::Eval) return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  const auto pr = softmax_probs(v);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i)
    if (x < (acc += pr[i])) return static_cast<int>(i);
  return static_cast<int>(pr.size()) - 1;
}

enum class CoordinatorVariant { Plain, ActionValue };

inline int proposal_width(const ActionSpace& space) {
  int w = 0;
  for (int sub : space.regions) w = std::max(w, static_cast<int>(space.per_sub[sub].front().size()));
  return w;
}

inline int coordinator_input_size(int obs_size, const ActionSpace& space, CoordinatorVariant v) {
  const int per = proposal_width(space) + 1 + (v == CoordinatorVariant::ActionValue ? 1 : 0);
  return obs_size + space.n_regions() * per;
}

// Global observation, then per region the proposed busbar bits (bus - 1, zero
// padded) and a do-nothing flag; the action-value variant adds the normalized value.
inline std::vector<double> coordinator_observation(std::span<const double> global, std::span<const Proposal> proposals,
                                                   const ActionSpace& space, CoordinatorVariant variant) {
  if (static_cast<int>(proposals.size()) != space.n_regions())
    throw std::invalid_argument("expected one proposal per region");
  const int width = proposal_width(space);
  std::vector<double> f(global.begin(), global.end());
  for (int r = 0; r < space.n_regions(); ++r) {
    const auto& p = proposals[r];
    if (p.region != r) throw std::invalid_argument("proposals are not in region order");
    std::vector<double> bits(width, 0.0);
    if (!p.action.is_do_nothing()) {
      if (p.action.sub != space.regions[r]) throw std::invalid_argument("proposal targets a foreign substation");
      for (std::size_t i = 0; i < p.action.buses.size(); ++i) bits[i] = p.action.buses[i] - 1.0;
    }
    f.insert(f.end(), bits.begin(), bits.end());
    f.push_back(p.action.is_do_nothing() ? 1.0 : 0.0);
    if (variant == CoordinatorVariant::ActionValue) {
      if (!p.raw_value) throw std::invalid_argument("action-value coordinator needs proposal values");
      f.push_back(*p.raw_value);
    }
  }
  return f;
}

using PolicyMap = std::map<int, PolicyParams>;

class DoNothingAgent : public Agent {
 public:
  Decision act(const Environment&, const Observation&, RunMode) override { return {}; }
};

class GreedyAgent : public Agent {
 public:
  Decision act(const Environment& env, const Observation&, RunMode) override {
    Decision d;
    d.action = greedy_select(env, env.action_space().actions);
    if (!d.action.is_do_nothing()) d.region = env.action_space().region_index(d.action.sub);
    return d;
  }
};

// One policy over [do-nothing] + the flat action list; learner id 0.
class SingleRlAgent : public Agent {
 public:
  SingleRlAgent(const PolicyMap& policies, std::uint64_t seed) : policies_(&policies), rng_(seed) {}
  Decision act(const Environment& env, const Observation& obs, RunMode mode) override {
    const auto& p = policies_->at(0);
    const auto r = policy_act(p, obs.features, mode, rng_);
    Decision d;
    if (r.action > 0) {
      d.action = env.action_space().actions.at(r.action - 1);
      d.region = env.action_space().region_index(d.action.sub);
    }
    d.steps.push_back({0, obs.features, r.action, r.log_prob, r.value, true});
    return d;
  }

 private:
  const PolicyMap* policies_;
  std::mt19937_64 rng_;
};

enum class RegionalKind { Greedy, Rl };
enum class CoordinatorKind { Capa, ValueSoftmax, Rl, ActionValueRl, Random };

struct ArchitectureSpec {
  RegionalKind regional = RegionalKind::Greedy;
  CoordinatorKind coordinator = CoordinatorKind::Capa;

  bool coordinator_learns() const {
    return coordinator == CoordinatorKind::Rl || coordinator == CoordinatorKind::ActionValueRl;
  }
  void validate() const {
    const bool needs_values =
        coordinator == CoordinatorKind::ValueSoftmax || coordinator == CoordinatorKind::ActionValueRl;
    if (needs_values && regional != RegionalKind::Rl)
      throw std::invalid_argument("value-based coordinators need learned proposers that emit action-values");
  }
};

// Regional proposers followed by one coordinator. Learner ids: coordinator 0,
// region r uses 1 + r.
class CcmaAgent : public Agent {
 public:
  CcmaAgent(ArchitectureSpec spec, const PolicyMap* policies, std::uint64_t seed)
      : spec_(spec), policies_(policies), rng_(seed) {
    spec_.validate();
    if ((spec_.regional == RegionalKind::Rl || spec_.coordinator_learns()) && policies_ == nullptr)
      throw std::invalid_argument("learned architecture built without policies");
  }

  void begin_episode() override { capa_ = {}; }

  std::vector<Proposal> propose(const Environment& env, const Observation& obs, RunMode mode) {
    const auto& space = env.action_space();
    std::vector<Proposal> out;
    for (int r = 0; r < space.n_regions(); ++r) {
      if (spec_.regional == RegionalKind::Greedy) {
        out.push_back(greedy_regional_propose(env, r));
        continue;
      }
      const auto& p = policies_->at(1 + r);
      const auto a = policy_act(p, obs.features, mode, rng_);
      Proposal pr;
      pr.region = r;
      const auto& cfg = space.per_sub[space.regions[r]].at(a.action);
      if (env.topology()[space.regions[r]] != cfg) pr.action = TopologyAction{space.regions[r], cfg};
      pr.value = a.value;
      pr.raw_value = a.raw_value;
      pr.step = PolicyStep{1 + r, obs.features, a.action, a.log_prob, a.value, true};
      out.push_back(std::move(pr));
    }
    return out;
  }

  Decision act(const Environment& env, const Observation& obs, RunMode mode) override {
    const auto& space = env.action_space();
    auto proposals = propose(env, obs, mode);
    Decision d;
    int chosen = -1;
    switch (spec_.coordinator) {
      case CoordinatorKind::Capa: {
        auto gen = [&] { return capa_priority_list(env.grid(), space, obs.rho); };
        const auto c = ordered_capa_select(proposals, capa_, gen);
        chosen = c.region;
        // all proposals idle: credit the most loaded region for its do-nothing
        if (chosen < 0 && !proposals.empty()) chosen = gen().front();
        break;
      }
      case CoordinatorKind::ValueSoftmax:
        chosen = value_softmax_select(proposals, mode, rng_);
        break;
      case CoordinatorKind::Rl:
      case CoordinatorKind::ActionValueRl: {
        const auto variant = spec_.coordinator == CoordinatorKind::Rl ? CoordinatorVariant::Plain
                                                                       : CoordinatorVariant::ActionValue;
        auto f = coordinator_observation(obs.features, proposals, space, variant);
        const auto a = policy_act(policies_->at(0), f, mode, rng_);
        chosen = a.action;
        d.steps.push_back({0, std::move(f), a.action, a.log_prob, a.value, false});
        break;
      }
      case CoordinatorKind::Random: {
        std::vector<int> live;
        for (const auto& p : proposals)
          if (!p.action.is_do_nothing()) live.push_back(p.region);
        if (!live.empty()) chosen = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng_)];
        else if (!proposals.empty()) chosen = std::uniform_int_distribution<int>(0, space.n_regions() - 1)(rng_);
        break;
      }
    }
    if (chosen >= 0) {
      d.region = chosen;
      d.action = proposals.at(chosen).action;
      if (proposals[chosen].step) d.steps.push_back(*proposals[chosen].step);
    }
    last_proposals_ = std::move(proposals);
    return d;
  }

  const std::vector<Proposal>& last_proposals() const { return last_proposals_; }

 private:
  ArchitectureSpec spec_;
  const PolicyMap* policies_;
  std::mt19937_64 rng_;
  CoordinatorStatePriority capa_;
  std::vector<Proposal> last_proposals_;
};

inline const std::vector<std::string>& architecture_keys() {
  static const std::vector<std::string> keys{"do_nothing", "greedy",       "single_rl",  "greedy_capa",
                                             "rl_capa",    "greedy_rl",    "rl_rl",      "rl_action_value_rl",
                                             "rl_value_softmax", "rl_random", "greedy_random"};
  return keys;
}

inline std::optional<ArchitectureSpec> ccma_spec(const std::string& key) {
  static const std::map<std::string, ArchitectureSpec> table{
      {"greedy_capa", {RegionalKind::Greedy, CoordinatorKind::Capa}},
      {"rl_capa", {RegionalKind::Rl, CoordinatorKind::Capa}},
      {"greedy_rl", {RegionalKind::Greedy, CoordinatorKind::Rl}},
      {"rl_rl", {RegionalKind::Rl, CoordinatorKind::Rl}},
      {"rl_action_value_rl", {RegionalKind::Rl, CoordinatorKind::ActionValueRl}},
      {"rl_value_softmax", {RegionalKind::Rl, CoordinatorKind::ValueSoftmax}},
      {"rl_random", {RegionalKind::Rl, CoordinatorKind::Random}},
      {"greedy_random", {RegionalKind::Greedy, CoordinatorKind::Random}},
      {"greedy_value_softmax", {RegionalKind::Greedy, CoordinatorKind::ValueSoftmax}},
      {"greedy_action_value_rl", {RegionalKind::Greedy, CoordinatorKind::ActionValueRl}},
  };
  auto it = table.find(key);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline void validate_architecture(const std::string& key) {
  if (key == "do_nothing" || key == "greedy" || key == "single_rl") return;
  const auto spec = ccma_spec(key);
  if (!spec) throw std::invalid_argument("unknown architecture '" + key + "'");
  spec->validate();
}

struct LearnerShape {
  int inputs = 0;
  int actions = 0;
};

// Network shapes needed by an architecture, keyed by learner id.
inline std::map<int, LearnerShape> learner_shapes(const std::string& key, const ActionSpace& space, int obs_size) {
  validate_architecture(key);
  std::map<int, LearnerShape> out;
  if (key == "single_rl") {
    out[0] = {obs_size, 1 + space.size()};
    return out;
  }
  const auto spec = ccma_spec(key);
  if (!spec) return out;
  if (spec->regional == RegionalKind::Rl)
    for (int r = 0; r < space.n_regions(); ++r)
      out[1 + r] = {obs_size, static_cast<int>(space.per_sub[space.regions[r]].size())};
  if (spec->coordinator_learns()) {
    const auto v = spec->coordinator == CoordinatorKind::Rl ? CoordinatorVariant::Plain : CoordinatorVariant::ActionValue;
    out[0] = {coordinator_input_size(obs_size, space, v), space.n_regions()};
  }
  return out;
}

inline std::unique_ptr<Agent> compose_architecture(const std::string& key, const PolicyMap* policies,
                                                   std::uint64_t seed) {
  validate_architecture(key);
  if (key == "do_nothing") return std::make_unique<DoNothingAgent>();
  if (key == "greedy") return std::make_unique<GreedyAgent>();
  if (key == "single_rl") {
    if (!policies) throw std::invalid_argument("single_rl needs a policy");
    return std::make_unique<SingleRlAgent>(*policies, seed);
  }
  return std::make_unique<CcmaAgent>(*ccma_spec(key), policies, seed);
}

}  // namespace gridctl

#endif  // GRIDCTL_AGENTS_HPP_
