#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gridctl;

namespace {

TopologyAction act(int sub, std::uint8_t second) { return {sub, SubConfig{1, second}}; }

// Lookup-table simulator keyed on the substation id; -1 is do-nothing.
auto table_sim(std::map<int, double> v) {
  return [v = std::move(v)](const TopologyAction& a) { return v.at(a.sub); };
}

Proposal proposal(int region, TopologyAction a, std::optional<double> value = std::nullopt) {
  Proposal p;
  p.region = region;
  p.action = std::move(a);
  p.value = value;
  p.raw_value = value;
  return p;
}

struct Case5 {
  GridModel grid = testutil::bundled("case5");
  ActionSpace space = build_action_space(grid, ActionSpaceMode::N1Secure);
};

// Environment positioned at the first timestep where the agent would be called.
Observation first_hot_state(Environment& env, const ScenarioData& s) {
  auto obs = env.reset(s, 0);
  while (!env.done() && gate(obs) == GateMode::DoNothing) obs = env.step(TopologyAction::do_nothing()).obs;
  return obs;
}

}  // namespace

TEST(Agents, GreedyPicksLowestAndPrefersDoNothingOnTies) {
  const std::vector<TopologyAction> acts{act(0, 2), act(1, 2), act(2, 2)};
  EXPECT_EQ(greedy_select(acts, table_sim({{-1, 0.9}, {0, 0.8}, {1, 0.7}, {2, 0.7}})), 1);
  EXPECT_EQ(greedy_select(acts, table_sim({{-1, 0.5}, {0, 0.8}, {1, 0.7}, {2, 0.6}})), -1);
  EXPECT_EQ(greedy_select(acts, table_sim({{-1, 0.7}, {0, 0.7}, {1, 0.8}, {2, 0.9}})), -1);
  EXPECT_EQ(greedy_select(acts, table_sim({{-1, kInf}, {0, kInf}, {1, 1.4}, {2, kInf}})), 1);
  EXPECT_EQ(greedy_select(std::span<const TopologyAction>{}, table_sim({{-1, 2.0}})), -1);
}

TEST(Agents, RegionalGreedyProposesDoNothingUnlessStrictlyBetter) {
  const std::vector<TopologyAction> cfgs{act(3, 2)};
  EXPECT_TRUE(greedy_regional_propose(0, cfgs, table_sim({{-1, 0.9}, {3, 0.9}})).action.is_do_nothing());
  const auto p = greedy_regional_propose(4, cfgs, table_sim({{-1, 0.9}, {3, 0.85}}));
  EXPECT_EQ(p.action, cfgs[0]);
  EXPECT_EQ(p.region, 4);
}

TEST(Agents, FirstImprovement) {
  std::mt19937_64 rng(0);
  const std::vector<TopologyAction> cheap{act(0, 2), act(1, 2)}, expensive{act(2, 2)};
  // 1.0 <= 0.95 * 1.2, accepted before the better second cheap action is tried
  EXPECT_EQ(first_improvement_select(cheap, expensive, table_sim({{-1, 1.2}, {0, 1.0}, {1, 0.5}, {2, 0.4}}), 0.9, rng),
            cheap[0]);
  // nothing accepted: best seen
  EXPECT_EQ(
      first_improvement_select(cheap, expensive, table_sim({{-1, 1.0}, {0, 0.99}, {1, 0.98}, {2, 0.97}}), 0.9, rng),
      expensive[0]);
  // safe expensive action
  EXPECT_EQ(first_improvement_select(cheap, expensive, table_sim({{-1, 1.0}, {0, 1.1}, {1, 1.2}, {2, 0.8}}), 0.9, rng),
            expensive[0]);
  // everything worse than do-nothing
  EXPECT_TRUE(first_improvement_select(cheap, expensive, table_sim({{-1, 0.96}, {0, 1.1}, {1, 1.2}, {2, 1.3}}), 0.9, rng)
                  .is_do_nothing());
}

TEST(Agents, CapaPriorityOrdersRegionsByLoading) {
  Case5 c;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> rho(c.grid.n_lines());
    for (auto& r : rho) r = k % 5 == 0 ? 0.5 : u(rng);  // every fifth draw is all ties
    std::vector<double> key(c.space.n_regions(), 0.0);
    for (int r = 0; r < c.space.n_regions(); ++r)
      for (int l = 0; l < c.grid.n_lines(); ++l) {
        const auto& line = c.grid.lines[l];
        if (line.origin == c.space.regions[r] || line.extremity == c.space.regions[r]) key[r] = std::max(key[r], rho[l]);
      }
    const auto order = capa_priority_list(c.grid, c.space, rho);
    ASSERT_EQ(static_cast<int>(order.size()), c.space.n_regions());
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      EXPECT_GE(key[order[i]], key[order[i + 1]]);
      if (key[order[i]] == key[order[i + 1]]) EXPECT_LT(order[i], order[i + 1]);
    }
  }
}

TEST(Agents, OrderedCapaWalksThePriorityList) {
  // regions A = 0, B = 1; both propose an action
  const std::vector<Proposal> both{proposal(0, act(5, 2)), proposal(1, act(6, 2))};
  CoordinatorStatePriority st;
  int generated = 0;
  auto gen = [&] {
    ++generated;
    return std::vector<int>{0, 1};
  };
  auto c = ordered_capa_select(both, st, gen);
  EXPECT_EQ(c.region, 0);
  EXPECT_EQ(*st.pending, std::vector<int>{1});
  c = ordered_capa_select(both, st, gen);
  EXPECT_EQ(c.region, 1);
  EXPECT_TRUE(st.pending->empty());
  c = ordered_capa_select(both, st, gen);
  EXPECT_EQ(c.region, 0);
  EXPECT_EQ(generated, 2);
  // idle head of the list is skipped and stays queued
  const std::vector<Proposal> second_only{proposal(0, {}), proposal(1, act(6, 2))};
  st = {};
  c = ordered_capa_select(second_only, st, gen);
  EXPECT_EQ(c.region, 1);
  EXPECT_EQ(*st.pending, std::vector<int>{0});
  // every proposal idle: no region, list discarded
  const std::vector<Proposal> idle{proposal(0, {}), proposal(1, {})};
  c = ordered_capa_select(idle, st, gen);
  EXPECT_EQ(c.region, -1);
  EXPECT_TRUE(c.action.is_do_nothing());
  EXPECT_FALSE(st.pending.has_value());
}

TEST(Agents, ValueSoftmax) {
  const std::vector<Proposal> ps{proposal(0, act(1, 2), std::log(2.0)), proposal(1, act(2, 2), 0.0)};
  const std::vector<double> v{std::log(2.0), 0.0};
  const auto pr = softmax_probs(v);
  EXPECT_NEAR(pr[0], 2.0 / 3.0, 1e-12);
  std::mt19937_64 rng(5);
  EXPECT_EQ(value_softmax_select(ps, RunMode::Eval, rng), 0);
  int zeros = 0;
  for (int i = 0; i < 6000; ++i) zeros += value_softmax_select(ps, RunMode::Train, rng) == 0;
  EXPECT_NEAR(zeros / 6000.0, 2.0 / 3.0, 0.02);
  const std::vector<Proposal> missing{proposal(0, act(1, 2))};
  EXPECT_THROW(value_softmax_select(missing, RunMode::Eval, rng), std::invalid_argument);
}

TEST(Agents, CoordinatorObservationLayout) {
  Case5 c;
  const int obs = 68;
  const std::vector<double> global(obs, 0.5);
  std::vector<Proposal> ps;
  for (int r = 0; r < c.space.n_regions(); ++r) ps.push_back(proposal(r, {}, 0.1 * r));
  const int w = proposal_width(c.space);
  ps[0].action = c.space.actions[c.space.region_actions[0][1]];
  for (auto v : {CoordinatorVariant::Plain, CoordinatorVariant::ActionValue}) {
    const auto f = coordinator_observation(global, ps, c.space, v);
    EXPECT_EQ(static_cast<int>(f.size()), coordinator_input_size(obs, c.space, v));
    const int per = w + 1 + (v == CoordinatorVariant::ActionValue ? 1 : 0);
    for (std::size_t i = 0; i < ps[0].action.buses.size(); ++i) EXPECT_EQ(f[obs + i], ps[0].action.buses[i] - 1.0);
    EXPECT_EQ(f[obs + w], 0.0);
    EXPECT_EQ(f[obs + per + w], 1.0);
    if (v == CoordinatorVariant::ActionValue) EXPECT_DOUBLE_EQ(f[obs + 2 * per - 1], 0.1);
  }
  auto swapped = ps;
  std::swap(swapped[0], swapped[1]);
  EXPECT_THROW(coordinator_observation(global, swapped, c.space, CoordinatorVariant::Plain), std::invalid_argument);
  ps.pop_back();
  EXPECT_THROW(coordinator_observation(global, ps, c.space, CoordinatorVariant::Plain), std::invalid_argument);
}

TEST(Agents, ArchitectureValidation) {
  for (const auto& k : architecture_keys()) EXPECT_NO_THROW(validate_architecture(k)) << k;
  EXPECT_THROW(validate_architecture("greedy_value_softmax"), std::invalid_argument);
  EXPECT_THROW(validate_architecture("greedy_action_value_rl"), std::invalid_argument);
  EXPECT_THROW(validate_architecture("nonsense"), std::invalid_argument);
  EXPECT_THROW(compose_architecture("rl_rl", nullptr, 0), std::invalid_argument);
}

TEST(Agents, ComposedAgentsEmitActionsFromTheirProposals) {
  Case5 c;
  const auto s = chunk_scenario(generate_scenarios(c.grid, 1, 2).front()).front();
  Environment env(c.grid, c.space);
  const auto obs = first_hot_state(env, s);
  ASSERT_FALSE(env.done());
  for (const auto& key : architecture_keys()) {
    PolicyMap policies;
    for (const auto& [id, shape] : learner_shapes(key, c.space, env.observation_size()))
      policies.emplace(id, make_policy(shape.inputs, shape.actions, 16, 100 + id));
    auto agent = compose_architecture(key, &policies, 3);
    agent->begin_episode();
    for (int rep = 0; rep < 5; ++rep) {
      const auto d = agent->act(env, obs, RunMode::Train);
      EXPECT_TRUE(c.space.contains(d.action)) << key;
      for (const auto& st : d.steps) EXPECT_TRUE(policies.count(st.learner)) << key;
      if (auto* cc = dynamic_cast<CcmaAgent*>(agent.get())) {
        const auto& props = cc->last_proposals();
        EXPECT_EQ(static_cast<int>(props.size()), c.space.n_regions());
        bool found = d.action.is_do_nothing();
        for (const auto& p : props) found = found || p.action == d.action;
        EXPECT_TRUE(found) << key;
        if (d.region >= 0) EXPECT_EQ(props[d.region].action, d.action);
      }
    }
    if (key == "do_nothing") EXPECT_TRUE(agent->act(env, obs, RunMode::Eval).action.is_do_nothing());
  }
}

TEST(Agents, GreedyAgentMatchesExhaustiveSearch) {
  Case5 c;
  const auto s = chunk_scenario(generate_scenarios(c.grid, 1, 2).front()).front();
  Environment env(c.grid, c.space);
  const auto obs = first_hot_state(env, s);
  GreedyAgent g;
  const auto d = g.act(env, obs, RunMode::Eval);
  double best = simulated_max_rho(env, TopologyAction::do_nothing());
  for (const auto& a : c.space.actions) best = std::min(best, simulated_max_rho(env, a));
  EXPECT_DOUBLE_EQ(simulated_max_rho(env, d.action), best);
}
