#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace gridctl;

namespace {

void zero_head(Mlp& m) {
  const int tail = m.output_size() * m.hidden_size() + m.output_size();
  m.params().tail(tail).setZero();
}

std::vector<char> flags(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Learner, ZeroHeadGivesUniformPolicy) {
  auto p = make_policy(6, 5, 16, 3);
  zero_head(p.actor);
  std::mt19937_64 rng(0);
  const std::vector<double> f{0.1, -0.3, 0.7, 1.0, 0.0, 2.0};
  const auto r = policy_act(p, f, RunMode::Eval, rng);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.probs(i), 0.2, 1e-12);
  EXPECT_NEAR(r.log_prob, std::log(0.2), 1e-12);
}

TEST(Learner, FreshHeadIsNearUniform) {
  const auto p = make_policy(6, 5, 64, 3);
  std::mt19937_64 rng(0);
  const auto r = policy_act(p, std::vector<double>(6, 0.5), RunMode::Train, rng);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.probs(i), 0.2, 0.01);
}

TEST(Learner, SingleActionHasZeroLogProb) {
  const auto p = make_policy(3, 1, 8, 1);
  std::mt19937_64 rng(0);
  const auto r = policy_act(p, std::vector<double>{1, 2, 3}, RunMode::Train, rng);
  EXPECT_EQ(r.action, 0);
  EXPECT_NEAR(r.log_prob, 0.0, 1e-15);
}

TEST(Learner, InitialisationIsDeterministic) {
  EXPECT_EQ(make_policy(4, 3, 8, 9).actor.params(), make_policy(4, 3, 8, 9).actor.params());
  EXPECT_NE(make_policy(4, 3, 8, 9).actor.params(), make_policy(4, 3, 8, 10).actor.params());
  EXPECT_THROW(Mlp(0, 4, 2), std::invalid_argument);
}

TEST(Learner, OrthogonalInitHasOrthonormalRows) {
  Mlp m(8, 8, 2);
  std::mt19937_64 rng(5);
  m.init_orthogonal(rng, 1.0, 1.0);
  const Eigen::Map<const Eigen::MatrixXd> w2(m.params().data() + 8 * 8 + 8, 8, 8);
  EXPECT_TRUE((w2 * w2.transpose()).isApprox(Eigen::MatrixXd::Identity(8, 8), 1e-10));
}

TEST(Learner, GaeLambdaZeroIsTdError) {
  const std::vector<double> r{1.0, 0.5, 2.0}, v{0.2, 0.4, 0.1}, nv{0.4, 0.1, 9.0};
  const std::vector<int> k{1, 3, 2};
  const auto g = compute_gae(r, k, v, nv, flags({0, 0, 1}), flags({1, 1, 0}), 0.9, 0.0);
  EXPECT_NEAR(g.advantages[0], 1.0 + 0.9 * 0.4 - 0.2, 1e-12);
  EXPECT_NEAR(g.advantages[1], 0.5 + std::pow(0.9, 3) * 0.1 - 0.4, 1e-12);
  EXPECT_NEAR(g.advantages[2], 2.0 - 0.1, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.targets[i], g.advantages[i] + v[i], 1e-12);
}

TEST(Learner, GaeLambdaOneIsMonteCarlo) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> uk(1, 6);
  const int n = 12;
  std::vector<double> r(n), v(n), nv(n);
  std::vector<int> k(n);
  for (int i = 0; i < n; ++i) r[i] = u(rng), v[i] = u(rng), k[i] = uk(rng);
  for (int i = 0; i + 1 < n; ++i) nv[i] = v[i + 1];
  std::vector<char> term(n, 0), cont(n, 1);
  term[n - 1] = 1;
  cont[n - 1] = 0;
  const double gamma = 0.97;
  const auto g = compute_gae(r, k, v, nv, term, cont, gamma, 1.0);
  for (int i = 0; i < n; ++i) {
    double ret = 0.0, disc = 1.0;
    for (int j = i; j < n; ++j) {
      ret += disc * r[j];
      disc *= std::pow(gamma, k[j]);
    }
    EXPECT_NEAR(g.advantages[i], ret - v[i], 1e-9);
    EXPECT_NEAR(g.targets[i], ret, 1e-9);
  }
}

TEST(Learner, GaeTerminalAndErrors) {
  const auto g = compute_gae(std::vector<double>{1.0}, std::vector<int>{4}, std::vector<double>{0.3},
                             std::vector<double>{5.0}, flags({1}), flags({0}), 0.99, 0.95);
  EXPECT_NEAR(g.advantages[0], 0.7, 1e-12);
  EXPECT_THROW(compute_gae({}, {}, {}, {}, {}, {}, 0.99, 1.0), std::invalid_argument);
}

TEST(Learner, SurrogateExamples) {
  EXPECT_DOUBLE_EQ(surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(surrogate(0.5, 1.0, 0.2), 0.5);
  EXPECT_DOUBLE_EQ(surrogate(0.5, -1.0, 0.2), -0.8);
  EXPECT_DOUBLE_EQ(surrogate(1.5, -1.0, 0.2), -1.5);
  EXPECT_DOUBLE_EQ(surrogate(1.0, 2.0, 0.3), 2.0);
}

TEST(Learner, AdvantageNormalisation) {
  std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  normalize_advantages(a);
  double m = 0.0, s = 0.0;
  for (double x : a) m += x / 4;
  for (double x : a) s += (x - m) * (x - m) / 4;
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(Learner, ValueNormalizerMergesBatches) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(3.0, 2.0);
  std::vector<double> xs(300);
  for (auto& x : xs) x = nd(rng);
  ValueNormalizer a, b;
  a.update(xs);
  b.update(std::span<const double>(xs).subspan(0, 37));
  b.update(std::span<const double>(xs).subspan(37, 200));
  b.update(std::span<const double>(xs).subspan(237));
  EXPECT_NEAR(a.mean, b.mean, 1e-10);
  EXPECT_NEAR(a.var, b.var, 1e-10);
  EXPECT_NEAR(b.denormalize(b.normalize(1.7)), 1.7, 1e-12);
  ValueNormalizer off;
  off.enabled = false;
  off.update(xs);
  EXPECT_EQ(off.normalize(5.0), 5.0);
}

TEST(Learner, LossGradientMatchesFiniteDifferences) {
  auto p = make_policy(3, 4, 5, 12);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < p.actor.params().size(); ++i) p.actor.params()(i) += 0.3 * u(rng);
  TrainConfig cfg;
  cfg.clip = 0.5;
  cfg.entropy_coef = 0.01;
  cfg.vf_clip = 100.0;
  PpoBatch b;
  const int n = 6;
  b.x.resize(3, n);
  b.old_log_prob.resize(n);
  b.advantage.resize(n);
  b.target.resize(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 3; ++i) b.x(i, j) = u(rng);
    b.actions.push_back(j % 4);
    const Eigen::VectorXd lp = log_softmax(p.actor.forward_one(std::vector<double>(b.x.col(j).data(), b.x.col(j).data() + 3)));
    b.old_log_prob(j) = lp(j % 4) + 0.05 * u(rng);  // ratios stay inside the clip band
    b.advantage(j) = u(rng);
    b.target(j) = u(rng);
  }
  const auto loss = ppo_loss(p, b, cfg);
  const double eps = 1e-5;
  auto check = [&](Mlp& m, const Eigen::VectorXd& grad) {
    for (int i = 0; i < m.params().size(); ++i) {
      const double keep = m.params()(i);
      m.params()(i) = keep + eps;
      const double up = ppo_loss(p, b, cfg).total;
      m.params()(i) = keep - eps;
      const double dn = ppo_loss(p, b, cfg).total;
      m.params()(i) = keep;
      const double num = (up - dn) / (2 * eps);
      EXPECT_LE(std::abs(num - grad(i)), 1e-4 * (std::abs(num) + std::abs(grad(i))) + 1e-8) << i;
    }
  };
  check(p.actor, loss.actor_grad);
  check(p.critic, loss.critic_grad);
}

TEST(Learner, ZeroLearningRateLeavesParametersUntouched) {
  auto p = make_policy(2, 3, 8, 1);
  const auto actor = p.actor.params(), critic = p.critic.params();
  std::vector<LearnerSample> s;
  for (int i = 0; i < 20; ++i) {
    LearnerSample x;
    x.features = {0.1 * i, 1.0};
    x.action = i % 3;
    x.log_prob = std::log(1.0 / 3);
    x.reward = i % 2;
    x.terminal = true;
    x.episode = i;
    s.push_back(x);
  }
  TrainConfig cfg;
  cfg.lr = 0.0;
  std::mt19937_64 rng(0);
  ppo_update(p, s, cfg, rng);
  EXPECT_TRUE(p.actor.params() == actor);
  EXPECT_TRUE(p.critic.params() == critic);
}

TEST(Learner, LearnsAThreeArmedBandit) {
  auto p = make_policy(1, 3, 16, 7);
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.sgd_iters = 4;
  cfg.minibatch = 32;
  std::mt19937_64 rng(1);
  const std::vector<double> f{1.0};
  int updates = 0;
  double best = 0.0;
  for (; updates < 200; ++updates) {
    std::vector<LearnerSample> batch;
    for (int i = 0; i < 64; ++i) {
      const auto a = policy_act(p, f, RunMode::Train, rng);
      LearnerSample s;
      s.features = f;
      s.action = a.action;
      s.log_prob = a.log_prob;
      s.value = a.value;
      s.reward = a.action == 2 ? 1.0 : 0.0;
      s.terminal = true;
      s.episode = i;
      batch.push_back(s);
    }
    ppo_update(p, batch, cfg, rng);
    best = policy_act(p, f, RunMode::Eval, rng).probs(2);
    if (best > 0.95) break;
  }
  EXPECT_GT(best, 0.95);
  EXPECT_LT(updates, 200);
}

TEST(Learner, ReadyToTrain) {
  using V = std::vector<std::size_t>;
  EXPECT_TRUE(ready_to_train(V{128, 128}, 128));
  EXPECT_FALSE(ready_to_train(V{127, 255}, 128));
  EXPECT_TRUE(ready_to_train(V{10, 256}, 128));
  EXPECT_FALSE(ready_to_train(V{}, 128));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> u(0, 300);
  for (int k = 0; k < 500; ++k) {
    V s(3);
    for (auto& x : s) x = u(rng);
    if (!ready_to_train(s, 128)) continue;
    s[k % 3] += u(rng);
    EXPECT_TRUE(ready_to_train(s, 128));
  }
}

TEST(Learner, SuccessorFlagsRequireContiguity) {
  std::vector<LearnerSample> s(4);
  s[0].t_start = 0, s[0].steps = 3;
  s[1].t_start = 3, s[1].steps = 2;
  s[2].t_start = 9, s[2].steps = 1;  // gap
  s[3].t_start = 10, s[3].episode = 1;
  const auto c = successor_flags(s);
  EXPECT_EQ(c, (std::vector<char>{1, 0, 0, 0}));
}

TEST(Learner, CreditAssignmentRoutesTransitions) {
  std::vector<SmdpTransition> tr(2);
  tr[0] = {{1.0}, {}, 0.5, 3, {2.0}, false, 0};
  tr[1] = {{2.0}, {}, 0.25, 1, {3.0}, true, 3};
  std::vector<Decision> sel(2);
  sel[0].steps = {{0, {10.0}, 1, -0.1, 0.0, false}, {2, {1.0}, 0, -0.2, 0.0, true}};
  sel[1].steps = {{0, {20.0}, 0, -0.3, 0.0, false}};
  ExperienceBuffer buf;
  assign_smdp_credit(tr, sel, 7, buf);
  ASSERT_EQ(buf[0].size(), 2u);
  ASSERT_EQ(buf[2].size(), 1u);
  EXPECT_EQ(buf[0][0].next_features, std::vector<double>{20.0});
  EXPECT_FALSE(buf[0][0].terminal);
  EXPECT_EQ(buf[0][0].reward, 0.5);
  EXPECT_EQ(buf[0][0].steps, 3);
  EXPECT_EQ(buf[0][0].episode, 7);
  EXPECT_TRUE(buf[0][1].terminal);
  EXPECT_EQ(buf[2][0].next_features, std::vector<double>{2.0});
  EXPECT_EQ(buf[2][0].action, 0);
  // a learner absent from the following decision has no successor input
  sel[1].steps.clear();
  ExperienceBuffer b2;
  assign_smdp_credit(tr, sel, 0, b2);
  EXPECT_TRUE(b2[0][0].terminal);
  sel.pop_back();
  EXPECT_THROW(assign_smdp_credit(tr, sel, 0, b2), std::invalid_argument);
}

TEST(Learner, CheckpointRoundTrip) {
  auto p = make_policy(4, 3, 8, 2);
  p.value_norm.update(std::vector<double>{1.0, 2.0, 5.0});
  p.updates = 17;
  const auto q = policy_from_json(json::parse(policy_to_json(p).dump()));
  EXPECT_EQ(q.actor.params(), p.actor.params());
  EXPECT_EQ(q.critic.params(), p.critic.params());
  EXPECT_EQ(q.updates, 17);
  EXPECT_EQ(q.value_norm.mean, p.value_norm.mean);
  EXPECT_EQ(q.value_norm.var, p.value_norm.var);
  const std::vector<double> f{0.3, 0.1, -2.0, 1.0};
  EXPECT_EQ(policy_value(p, f), policy_value(q, f));
  auto j = policy_to_json(p);
  j["actor"] = std::vector<double>{1.0};
  EXPECT_THROW(policy_from_json(j), std::runtime_error);
}

TEST(Learner, NonFiniteLogitsAreReported) {
  auto p = make_policy(2, 2, 4, 1);
  p.actor.params()(0) = std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng(0);
  EXPECT_THROW(policy_act(p, std::vector<double>{1.0, 1.0}, RunMode::Eval, rng), std::runtime_error);
}
