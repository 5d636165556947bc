#ifndef GRIDCTL_LEARNER_HPP_
#define GRIDCTL_LEARNER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridctl/control.hpp"
#include "gridctl/grid_model.hpp"

namespace gridctl {

// Two tanh hidden layers and a linear head. Parameters live in one flat vector:
// W1 (h x in), b1, W2 (h x h), b2, W3 (out x h), b3, matrices column-major.
class Mlp {
 public:
  struct Cache {
    Eigen::MatrixXd x, h1, h2;
  };

  Mlp() = default;
  Mlp(int in, int hidden, int out) : in_(in), hidden_(hidden), out_(out) {
    if (in < 1 || hidden < 1 || out < 1) throw std::invalid_argument("network dimensions must be positive");
    theta_ = Eigen::VectorXd::Zero(n_params());
  }

  int input_size() const { return in_; }
  int hidden_size() const { return hidden_; }
  int output_size() const { return out_; }
  int n_params() const { return hidden_ * in_ + hidden_ + hidden_ * hidden_ + hidden_ + out_ * hidden_ + out_; }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  // Orthogonal weights with the given per-layer gains, zero biases.
  void init_orthogonal(std::mt19937_64& rng, double hidden_gain, double head_gain) {
    theta_.setZero();
    orthogonal(w1(), rng, hidden_gain);
    orthogonal(w2(), rng, hidden_gain);
    orthogonal(w3(), rng, head_gain);
  }

  // x: in x batch. Returns out x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (x.rows() != in_)
      throw std::invalid_argument("feature length " + std::to_string(x.rows()) + " does not match network input " +
                                  std::to_string(in_));
    Eigen::MatrixXd h1 = ((cw1() * x).colwise() + cb1()).array().tanh().matrix();
    Eigen::MatrixXd h2 = ((cw2() * h1).colwise() + cb2()).array().tanh().matrix();
    Eigen::MatrixXd y = (cw3() * h2).colwise() + cb3();
    if (cache) {
      cache->x = x;
      cache->h1 = std::move(h1);
      cache->h2 = std::move(h2);
    }
    return y;
  }

  Eigen::VectorXd forward_one(std::span<const double> f) const {
    Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
    return forward(Eigen::MatrixXd(x)).col(0);
  }

  // Gradient of sum(dy .* y) with respect to the flat parameters.
  Eigen::VectorXd backward(const Cache& c, const Eigen::MatrixXd& dy) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params());
    Mlp view = *this;  // reuse the block maps over g
    view.theta_.swap(g);
    view.w3() = dy * c.h2.transpose();
    view.b3() = dy.rowwise().sum();
    Eigen::MatrixXd dz2 = ((cw3().transpose() * dy).array() * (1.0 - c.h2.array().square())).matrix();
    view.w2() = dz2 * c.h1.transpose();
    view.b2() = dz2.rowwise().sum();
    Eigen::MatrixXd dz1 = ((cw2().transpose() * dz2).array() * (1.0 - c.h1.array().square())).matrix();
    view.w1() = dz1 * c.x.transpose();
    view.b1() = dz1.rowwise().sum();
    return std::move(view.theta_);
  }

 private:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using CMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using CVecMap = Eigen::Map<const Eigen::VectorXd>;

  int o_b1() const { return hidden_ * in_; }
  int o_w2() const { return o_b1() + hidden_; }
  int o_b2() const { return o_w2() + hidden_ * hidden_; }
  int o_w3() const { return o_b2() + hidden_; }
  int o_b3() const { return o_w3() + out_ * hidden_; }

  MatMap w1() { return {theta_.data(), hidden_, in_}; }
  VecMap b1() { return {theta_.data() + o_b1(), hidden_}; }
  MatMap w2() { return {theta_.data() + o_w2(), hidden_, hidden_}; }
  VecMap b2() { return {theta_.data() + o_b2(), hidden_}; }
  MatMap w3() { return {theta_.data() + o_w3(), out_, hidden_}; }
  VecMap b3() { return {theta_.data() + o_b3(), out_}; }
  CMatMap cw1() const { return {theta_.data(), hidden_, in_}; }
  CVecMap cb1() const { return {theta_.data() + o_b1(), hidden_}; }
  CMatMap cw2() const { return {theta_.data() + o_w2(), hidden_, hidden_}; }
  CVecMap cb2() const { return {theta_.data() + o_b2(), hidden_}; }
  CMatMap cw3() const { return {theta_.data() + o_w3(), out_, hidden_}; }
  CVecMap cb3() const { return {theta_.data() + o_b3(), out_}; }

  static void orthogonal(MatMap w, std::mt19937_64& rng, double gain) {
    const Eigen::Index r = w.rows(), c = w.cols();
    const Eigen::Index big = std::max(r, c), small = std::min(r, c);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a(big, small);
    for (Eigen::Index j = 0; j < small; ++j)
      for (Eigen::Index i = 0; i < big; ++i) a(i, j) = n(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd rr = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < small; ++j)
      if (rr(j, j) < 0) q.col(j) *= -1.0;
    w = gain * (r >= c ? q : Eigen::MatrixXd(q.transpose()));
  }

  int in_ = 0, hidden_ = 0, out_ = 0;
  Eigen::VectorXd theta_;
};

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m, v;
  std::int64_t t = 0;

  void reset(Eigen::Index n) {
    m = Eigen::VectorXd::Zero(n);
    v = Eigen::VectorXd::Zero(n);
    t = 0;
  }
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& g, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

// Running mean and variance of value targets (parallel-merge update).
struct ValueNormalizer {
  bool enabled = true;
  double mean = 0.0;
  double var = 1.0;
  double count = 0.0;

  double std_dev() const { return std::max(std::sqrt(var), 1e-4); }
  double normalize(double x) const { return enabled ? (x - mean) / std_dev() : x; }
  double denormalize(double y) const { return enabled ? y * std_dev() + mean : y; }
  void update(std::span<const double> xs) {
    if (!enabled || xs.empty()) return;
    const double n = static_cast<double>(xs.size());
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    const double v = s / n;
    if (count == 0.0) {
      mean = m, var = v, count = n;
      return;
    }
    const double tot = count + n;
    const double d = m - mean;
    var = (var * count + v * n + d * d * count * n / tot) / tot;
    mean += d * n / tot;
    count = tot;
  }
};

struct TrainConfig {
  double lr = 5e-4;
  int train_batch = 128;  // bs
  int minibatch = 64;     // mbs
  int sgd_iters = 15;     // it
  double clip = 0.3;      // cp
  double vf_clip = 10.0;  // vfc
  double vf_coef = 1.0;   // vfl
  double lambda = 1.0;
  double gamma = 0.99;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  int hidden = 64;
  bool value_norm = true;

  void validate() const {
    if (minibatch < 1 || train_batch < 1) throw std::invalid_argument("batch sizes must be positive");
    if (minibatch > train_batch)
      throw std::invalid_argument("minibatch size " + std::to_string(minibatch) + " exceeds train batch size " +
                                  std::to_string(train_batch));
    if (!(clip > 0)) throw std::invalid_argument("clip parameter must be positive");
    if (!(lambda >= 0 && lambda <= 1) || !(gamma >= 0 && gamma <= 1))
      throw std::invalid_argument("lambda and gamma must lie in [0, 1]");
    if (!(lr >= 0) || sgd_iters < 0 || hidden < 1) throw std::invalid_argument("invalid optimizer settings");
  }
};

struct PolicyParams {
  Mlp actor;
  Mlp critic;
  Adam actor_opt;
  Adam critic_opt;
  ValueNormalizer value_norm;
  std::int64_t updates = 0;

  int n_inputs() const { return actor.input_size(); }
  int n_actions() const { return actor.output_size(); }
  bool all_finite() const { return actor.params().allFinite() && critic.params().allFinite(); }
};

inline PolicyParams make_policy(int n_inputs, int n_actions, int hidden, std::uint64_t seed,
                                bool value_norm = true) {
  PolicyParams p;
  p.actor = Mlp(n_inputs, hidden, n_actions);
  p.critic = Mlp(n_inputs, hidden, 1);
  std::mt19937_64 rng(seed);
  p.actor.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  p.critic.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  p.actor_opt.reset(p.actor.n_params());
  p.critic_opt.reset(p.critic.n_params());
  p.value_norm.enabled = value_norm;
  return p;
}

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;       // denormalized
  double raw_value = 0.0;   // network output
  Eigen::VectorXd probs;
};

inline double policy_value(const PolicyParams& p, std::span<const double> features) {
  return p.value_norm.denormalize(p.critic.forward_one(features)(0));
}

// Samples from the categorical policy in both modes.
inline ActResult policy_act(const PolicyParams& p, std::span<const double> features, RunMode /*mode*/,
                            std::mt19937_64& rng) {
  const Eigen::VectorXd logits = p.actor.forward_one(features);
  if (!logits.allFinite()) {
    std::ostringstream os;
    os << "non-finite policy logits after " << p.updates << " updates:";
    for (Eigen::Index i = 0; i < logits.size(); ++i) os << ' ' << logits(i);
    throw std::runtime_error(os.str());
  }
  const Eigen::VectorXd lp = log_softmax(logits);
  ActResult r;
  r.probs = lp.array().exp().matrix();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  r.action = static_cast<int>(lp.size()) - 1;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    acc += r.probs(i);
    if (x < acc) {
      r.action = static_cast<int>(i);
      break;
    }
  }
  r.log_prob = lp(r.action);
  r.raw_value = p.critic.forward_one(features)(0);
  r.value = p.value_norm.denormalize(r.raw_value);
  return r;
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> targets;
};

// sMDP GAE. continues[i] marks that sample i+1 is the direct successor of i.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const int> steps,
                             std::span<const double> values, std::span<const double> next_values,
                             std::span<const char> terminal, std::span<const char> continues, double gamma,
                             double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw std::invalid_argument("compute_gae on an empty trajectory");
  if (steps.size() != n || values.size() != n || next_values.size() != n || terminal.size() != n ||
      continues.size() != n)
    throw std::invalid_argument("compute_gae inputs differ in length");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.targets.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    const double gk = std::pow(gamma, steps[j]);
    const double live = terminal[j] ? 0.0 : 1.0;
    const double delta = rewards[j] + gk * next_values[j] * live - values[j];
    const double chain = (j + 1 < n && continues[j]) ? next_adv : 0.0;
    r.advantages[j] = delta + gk * lambda * live * chain;
    next_adv = r.advantages[j];
    r.targets[j] = r.advantages[j] + values[j];
  }
  return r;
}

inline void normalize_advantages(std::vector<double>& a) {
  if (a.empty()) return;
  const double n = static_cast<double>(a.size());
  const double m = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double s = 0.0;
  for (double x : a) s += (x - m) * (x - m);
  const double sd = std::sqrt(s / n);
  for (double& x : a) x = (x - m) / (sd + 1e-8);
}

// One learner-owned sample.
struct LearnerSample {
  std::vector<double> features;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  int steps = 1;
  bool terminal = false;
  std::vector<double> next_features;  // empty when terminal
  int episode = 0;
  int t_start = 0;
};

// Minibatch tensors for the loss.
struct PpoBatch {
  Eigen::MatrixXd x;              // in x B
  std::vector<int> actions;
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantage;      // normalized
  Eigen::VectorXd target;         // normalized value targets
};

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd actor_grad;
  Eigen::VectorXd critic_grad;
};

inline double surrogate(double ratio, double adv, double clip) {
  return std::min(ratio * adv, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv);
}

// Mean over the batch of -surrogate + vfl * min(err^2, vfc) - ent * entropy.
inline PpoLoss ppo_loss(const PolicyParams& p, const PpoBatch& b, const TrainConfig& cfg) {
  const Eigen::Index n = b.x.cols();
  PpoLoss out;
  Mlp::Cache ac, cc;
  const Eigen::MatrixXd logits = p.actor.forward(b.x, &ac);
  const Eigen::MatrixXd v = p.critic.forward(b.x, &cc);
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logits.rows(), n);
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(1, n);
  const double inv = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd lp = log_softmax(logits.col(j));
    const Eigen::VectorXd pr = lp.array().exp().matrix();
    const int a = b.actions[j];
    const double ratio = std::exp(lp(a) - b.old_log_prob(j));
    const double adv = b.advantage(j);
    const double s = surrogate(ratio, adv, cfg.clip);
    out.policy -= s * inv;
    const bool inside = ratio >= 1.0 - cfg.clip && ratio <= 1.0 + cfg.clip;
    if (!inside) out.clip_fraction += inv;
    // d surrogate / d ratio is adv unless the clipped branch is the active, flat one
    const bool unclipped_active = ratio * adv <= std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    const double ds_dlogp = (inside || unclipped_active) ? adv * ratio : 0.0;
    Eigen::VectorXd g = -pr;
    g(a) += 1.0;
    dlogits.col(j) += (-ds_dlogp * inv) * g;
    if (cfg.entropy_coef != 0.0) {
      const double h = -(pr.array() * lp.array()).sum();
      out.entropy += h * inv;
      // dH/dz_k = -p_k (log p_k + H)
      const Eigen::VectorXd dh = (-(pr.array() * (lp.array() + h))).matrix();
      dlogits.col(j) += (-cfg.entropy_coef * inv) * dh;
    }
    const double err = v(0, j) - b.target(j);
    const double sq = err * err;
    out.value += std::min(sq, cfg.vf_clip) * inv;
    if (sq < cfg.vf_clip) dv(0, j) = cfg.vf_coef * 2.0 * err * inv;
  }
  out.total = out.policy + cfg.vf_coef * out.value - cfg.entropy_coef * out.entropy;
  out.actor_grad = p.actor.backward(ac, dlogits);
  out.critic_grad = p.critic.backward(cc, dv);
  return out;
}

struct UpdateStats {
  int samples = 0;
  int minibatch_steps = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  bool rolled_back = false;
};

// Marks samples that are followed directly by their successor in the list.
inline std::vector<char> successor_flags(std::span<const LearnerSample> s) {
  std::vector<char> c(s.size(), 0);
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    c[i] = !s[i].terminal && s[i + 1].episode == s[i].episode && s[i + 1].t_start == s[i].t_start + s[i].steps;
  return c;
}

inline UpdateStats ppo_update(PolicyParams& p, std::span<const LearnerSample> samples, const TrainConfig& cfg,
                              std::mt19937_64& rng) {
  UpdateStats st;
  const int n = static_cast<int>(samples.size());
  st.samples = n;
  if (n == 0) return st;
  const PolicyParams snapshot = p;

  std::vector<double> rewards(n), values(n), next_values(n, 0.0);
  std::vector<int> steps(n);
  std::vector<char> terminal(n);
  for (int i = 0; i < n; ++i) {
    const auto& s = samples[i];
    rewards[i] = s.reward;
    steps[i] = s.steps;
    terminal[i] = s.terminal;
    values[i] = policy_value(p, s.features);
    if (!s.terminal) {
      if (s.next_features.empty()) throw std::invalid_argument("non-terminal sample without successor features");
      next_values[i] = policy_value(p, s.next_features);
    }
  }
  const auto cont = successor_flags(samples);
  auto gae = compute_gae(rewards, steps, values, next_values, terminal, cont, cfg.gamma, cfg.lambda);
  normalize_advantages(gae.advantages);
  p.value_norm.update(gae.targets);

  const int in = p.n_inputs();
  Eigen::MatrixXd x(in, n);
  Eigen::VectorXd oldlp(n), adv(n), tgt(n);
  std::vector<int> actions(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(samples[i].features.size()) != in)
      throw std::invalid_argument("sample feature length does not match the network input");
    x.col(i) = Eigen::Map<const Eigen::VectorXd>(samples[i].features.data(), in);
    actions[i] = samples[i].action;
    oldlp(i) = samples[i].log_prob;
    adv(i) = gae.advantages[i];
    tgt(i) = p.value_norm.normalize(gae.targets[i]);
  }

  const int mbs = std::min(cfg.minibatch, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.sgd_iters; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += mbs) {
      const int end = std::min(n, start + mbs);
      PpoBatch b;
      b.x.resize(in, end - start);
      b.old_log_prob.resize(end - start);
      b.advantage.resize(end - start);
      b.target.resize(end - start);
      for (int k = start; k < end; ++k) {
        const int i = order[k];
        b.x.col(k - start) = x.col(i);
        b.actions.push_back(actions[i]);
        b.old_log_prob(k - start) = oldlp(i);
        b.advantage(k - start) = adv(i);
        b.target(k - start) = tgt(i);
      }
      auto loss = ppo_loss(p, b, cfg);
      if (!std::isfinite(loss.total) || !loss.actor_grad.allFinite() || !loss.critic_grad.allFinite()) {
        p = snapshot;
        st.rolled_back = true;
        return st;
      }
      const double norm = std::sqrt(loss.actor_grad.squaredNorm() + loss.critic_grad.squaredNorm());
      if (cfg.max_grad_norm > 0 && norm > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / norm;
        loss.actor_grad *= s;
        loss.critic_grad *= s;
      }
      if (cfg.lr > 0) {
        p.actor_opt.step(p.actor.params(), loss.actor_grad, cfg.lr);
        p.critic_opt.step(p.critic.params(), loss.critic_grad, cfg.lr);
      }
      ++st.minibatch_steps;
      st.policy_loss = loss.policy;
      st.value_loss = loss.value;
      st.entropy = loss.entropy;
    }
  }
  if (!p.all_finite()) {
    p = snapshot;
    st.rolled_back = true;
    return st;
  }
  ++p.updates;
  return st;
}

inline bool ready_to_train(std::span<const std::size_t> sizes, std::size_t min_batch) {
  if (sizes.empty()) return false;
  bool all = true;
  for (auto s : sizes) {
    if (s >= 2 * min_batch) return true;
    all = all && s >= min_batch;
  }
  return all;
}

using ExperienceBuffer = std::map<int, std::vector<LearnerSample>>;

// Routes each transition to the learners that took part in its decision. A
// learner fed non-global features takes its successor input from its own next
// decision in the same episode.
inline void assign_smdp_credit(std::span<const SmdpTransition> transitions, std::span<const Decision> selections,
                               int episode, ExperienceBuffer& buffers) {
  if (transitions.size() != selections.size())
    throw std::invalid_argument("selection log has " + std::to_string(selections.size()) + " entries for " +
                                std::to_string(transitions.size()) + " transitions");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& tr = transitions[i];
    for (const auto& ps : selections[i].steps) {
      LearnerSample s;
      s.features = ps.features;
      s.action = ps.action;
      s.log_prob = ps.log_prob;
      s.value = ps.value;
      s.reward = tr.reward;
      s.steps = tr.steps;
      s.terminal = tr.terminal;
      s.episode = episode;
      s.t_start = tr.t_start;
      if (!tr.terminal) {
        if (ps.global_input) {
          s.next_features = tr.next_observation;
        } else if (i + 1 < selections.size()) {
          for (const auto& nx : selections[i + 1].steps)
            if (nx.learner == ps.learner) s.next_features = nx.features;
        }
        if (s.next_features.empty()) s.terminal = true;
      }
      buffers[ps.learner].push_back(std::move(s));
    }
  }
}

// Checkpoints: JSON with weights, normalizer state and a hash of the config text.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline json policy_to_json(const PolicyParams& p) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"inputs", p.actor.input_size()},
          {"hidden", p.actor.hidden_size()},
          {"actions", p.actor.output_size()},
          {"updates", p.updates},
          {"actor", vec(p.actor.params())},
          {"critic", vec(p.critic.params())},
          {"value_norm", {{"enabled", p.value_norm.enabled},
                          {"mean", p.value_norm.mean},
                          {"var", p.value_norm.var},
                          {"count", p.value_norm.count}}}};
}

inline PolicyParams policy_from_json(const json& j) {
  PolicyParams p;
  const int in = j.at("inputs"), h = j.at("hidden"), out = j.at("actions");
  p.actor = Mlp(in, h, out);
  p.critic = Mlp(in, h, 1);
  auto load = [](Mlp& m, const json& a, const char* what) {
    const auto v = a.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != m.n_params())
      throw std::runtime_error(std::string("checkpoint ") + what + " has " + std::to_string(v.size()) +
                               " parameters, expected " + std::to_string(m.n_params()));
    m.params() = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  load(p.actor, j.at("actor"), "actor");
  load(p.critic, j.at("critic"), "critic");
  p.actor_opt.reset(p.actor.n_params());
  p.critic_opt.reset(p.critic.n_params());
  p.updates = j.at("updates");
  const auto& vn = j.at("value_norm");
  p.value_norm.enabled = vn.at("enabled");
  p.value_norm.mean = vn.at("mean");
  p.value_norm.var = vn.at("var");
  p.value_norm.count = vn.at("count");
  return p;
}

}  // namespace gridctl

#endif  // GRIDCTL_LEARNER_HPP_
