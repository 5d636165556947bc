#ifndef GRIDCTL_EXPERIMENT_HPP_
#define GRIDCTL_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/agents.hpp"
#include "gridctl/control.hpp"
#include "gridctl/environment.hpp"
#include "gridctl/learner.hpp"
#include "gridctl/scenario.hpp"

namespace gridctl {

namespace fs = std::filesystem;

inline std::string data_dir() {
#ifdef GRIDCTL_DATA_DIR
  return GRIDCTL_DATA_DIR;
#else
  return "data";
#endif
}

// "case5" resolves to the bundled description; anything else is a path.
inline std::string resolve_grid_path(const std::string& name) {
  if (fs::exists(name)) return name;
  const fs::path bundled = fs::path(data_dir()) / (name + ".json");
  if (fs::exists(bundled)) return bundled.string();
  throw GridError("grid '" + name + "' is neither a file nor a bundled grid");
}

// ---------------------------------------------------------------------------
// Presets: chosen hyperparameters per (grid, opponent, architecture). Entries
// without cp/vfc/vfl/lambda keep the PPO defaults (0.3, 10, 1, 1.0).

struct PresetRow {
  const char* arch;
  double lr;
  int mbs, bs, it;
  double cp = 0.3, vfc = 10.0, vfl = 1.0, lambda = 1.0;
};

inline const std::map<std::string, std::vector<PresetRow>>& preset_tables() {
  static const std::map<std::string, std::vector<PresetRow>> t{
      {"case5/regular",
       {{"single_rl", 0.01, 32, 64, 15},
        {"rl_rl", 0.0005, 64, 128, 15},
        {"rl_action_value_rl", 0.0005, 64, 128, 15},
        {"rl_value_softmax", 0.0005, 64, 128, 15},
        {"rl_capa", 0.005, 32, 64, 15},
        {"rl_random", 0.01, 64, 64, 15},
        {"greedy_rl", 0.0005, 32, 128, 15}}},
      {"case5/opponent",
       {{"single_rl", 0.0007, 128, 512, 10},
        {"rl_rl", 0.0007, 64, 128, 5},
        {"rl_action_value_rl", 0.0003, 128, 256, 5},
        {"rl_value_softmax", 0.0005, 64, 128, 10},
        {"rl_capa", 0.0005, 128, 256, 5},
        {"rl_random", 0.0001, 64, 128, 5},
        {"greedy_rl", 0.00005, 64, 256, 10}}},
      {"case14/regular",
       {{"single_rl", 0.00005, 256, 1024, 15, 0.3, 10, 1, 0.95},
        {"rl_rl", 0.00007, 512, 256, 10, 0.15, 10, 1, 0.95},
        {"rl_action_value_rl", 0.0001, 256, 512, 10, 0.15, 20, 0.95, 0.95},
        {"rl_value_softmax", 0.00005, 64, 256, 10, 0.15, 10, 1, 0.92},
        {"rl_capa", 0.00005, 128, 256, 10, 0.3, 10, 1, 1},
        {"rl_random", 0.00001, 256, 256, 10, 0.3, 10, 1, 0.92},
        {"greedy_rl", 0.0005, 128, 512, 15, 0.3, 10, 0.95, 0.95}}},
      {"case14/opponent",
       {{"single_rl", 0.0005, 512, 2048, 5, 0.15, 10, 0.95, 0.95},
        {"rl_rl", 0.0001, 1024, 1024, 10, 0.15, 10, 0.95, 0.95},
        {"rl_action_value_rl", 0.0001, 1024, 2048, 10, 0.15, 10, 0.95, 0.95},
        {"greedy_rl", 0.0001, 1024, 1024, 10, 0.2, 10, 1, 0.95}}},
  };
  return t;
}

inline std::string preset_name(const std::string& grid, bool opponent, const std::string& arch) {
  return grid + "/" + (opponent ? "opponent" : "regular") + "/" + arch;
}

// Returns the preset, with mbs clamped to bs where a table row lists mbs > bs.
inline std::optional<TrainConfig> find_preset(const std::string& name) {
  const auto cut = name.rfind('/');
  if (cut == std::string::npos) return std::nullopt;
  const auto it = preset_tables().find(name.substr(0, cut));
  if (it == preset_tables().end()) return std::nullopt;
  const std::string arch = name.substr(cut + 1);
  for (const auto& r : it->second) {
    if (arch != r.arch) continue;
    TrainConfig c;
    c.lr = r.lr;
    c.train_batch = r.bs;
    c.minibatch = std::min(r.mbs, r.bs);
    c.sgd_iters = r.it;
    c.clip = r.cp;
    c.vf_clip = r.vfc;
    c.vf_coef = r.vfl;
    c.lambda = r.lambda;
    return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string grid = "case5";
  bool opponent = false;
  std::string architecture = "single_rl";
  ActionSpaceMode action_space = ActionSpaceMode::N1Secure;
  std::string preset;  // empty: derived from grid, opponent and architecture
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::int64_t budget = 100000;  // environment interactions
  std::int64_t validation_every = 5000;
  int validation_env_seeds = 0;  // 0: 1 without opponent, 3 with
  int eval_env_seeds = 10;  // per test scenario when the opponent is on
  int n_scenarios = 20;
  std::uint64_t scenario_seed = 7;
  std::uint64_t split_seed = 0;
  std::string scenario_dir;  // empty: generate in memory
  GateConfig gate;
  int jobs = 1;
  int checkpoint_every = 0;  // updates; 0 keeps only the final checkpoint
  std::string out_dir = "runs";

  std::map<std::string, std::string> overrides;  // train keys set explicitly

  std::string text() const;
  void validate() const {
    validate_architecture(architecture);
    train.validate();
    gate.validate();
    if (seeds.empty()) throw std::invalid_argument("no seeds given");
    auto s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw std::invalid_argument("seeds must be distinct");
    if (budget < 0 || validation_every < 1) throw std::invalid_argument("invalid budget or validation cadence");
    if (n_scenarios < 10) throw std::invalid_argument("need at least 10 scenarios");
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

// "0-9" or "1,4,7" or a mix.
inline std::vector<std::uint64_t> parse_seed_list(const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const auto a = std::stoull(item.substr(0, dash)), b = std::stoull(item.substr(dash + 1));
      if (b < a) throw std::invalid_argument("bad seed range '" + item + "'");
      for (auto s = a; s <= b; ++s) out.push_back(s);
    } else {
      out.push_back(std::stoull(item));
    }
  }
  return out;
}

inline const std::vector<std::string>& train_keys() {
  static const std::vector<std::string> k{"lr",     "train_batch", "minibatch",    "sgd_iters",     "clip",
                                          "vf_clip", "vf_coef",    "lambda",       "gamma",         "entropy_coef",
                                          "max_grad_norm", "hidden", "value_norm"};
  return k;
}

inline void apply_train_key(TrainConfig& t, const std::string& k, const std::string& v) {
  if (k == "lr") t.lr = std::stod(v);
  else if (k == "train_batch") t.train_batch = std::stoi(v);
  else if (k == "minibatch") t.minibatch = std::stoi(v);
  else if (k == "sgd_iters") t.sgd_iters = std::stoi(v);
  else if (k == "clip") t.clip = std::stod(v);
  else if (k == "vf_clip") t.vf_clip = std::stod(v);
  else if (k == "vf_coef") t.vf_coef = std::stod(v);
  else if (k == "lambda") t.lambda = std::stod(v);
  else if (k == "gamma") t.gamma = std::stod(v);
  else if (k == "entropy_coef") t.entropy_coef = std::stod(v);
  else if (k == "max_grad_norm") t.max_grad_norm = std::stod(v);
  else if (k == "hidden") t.hidden = std::stoi(v);
  else if (k == "value_norm") t.value_norm = parse_bool(v);
  else throw std::invalid_argument("unknown training key '" + k + "'");
}

inline void apply_key(RunConfig& c, const std::string& k, const std::string& v) {
  if (std::find(train_keys().begin(), train_keys().end(), k) != train_keys().end()) {
    c.overrides[k] = v;
    return;
  }
  if (k == "grid") c.grid = v;
  else if (k == "opponent") c.opponent = parse_bool(v);
  else if (k == "architecture") c.architecture = v;
  else if (k == "action_space") c.action_space = parse_action_space_mode(v);
  else if (k == "preset") c.preset = v;
  else if (k == "seeds") c.seeds = parse_seed_list(v);
  else if (k == "budget") c.budget = std::stoll(v);
  else if (k == "validation_every") c.validation_every = std::stoll(v);
  else if (k == "validation_env_seeds") c.validation_env_seeds = std::stoi(v);
  else if (k == "eval_env_seeds") c.eval_env_seeds = std::stoi(v);
  else if (k == "n_scenarios") c.n_scenarios = std::stoi(v);
  else if (k == "scenario_seed") c.scenario_seed = std::stoull(v);
  else if (k == "split_seed") c.split_seed = std::stoull(v);
  else if (k == "scenario_dir") c.scenario_dir = v;
  else if (k == "activation_threshold") c.gate.activation_threshold = std::stod(v);
  else if (k == "revert_threshold") c.gate.revert_threshold = std::stod(v);
  else if (k == "night_revert") c.gate.night_revert = parse_bool(v);
  else if (k == "jobs") c.jobs = std::stoi(v);
  else if (k == "checkpoint_every") c.checkpoint_every = std::stoi(v);
  else if (k == "out_dir") c.out_dir = v;
  else throw std::invalid_argument("unknown config key '" + k + "'");
}

// Fills train settings from the preset (when one exists), then explicit keys.
inline void finalize(RunConfig& c) {
  const std::string name = c.preset.empty() ? preset_name(c.grid, c.opponent, c.architecture) : c.preset;
  if (auto p = find_preset(name)) {
    c.train = *p;
    c.preset = name;
  } else if (!c.preset.empty()) {
    throw std::invalid_argument("unknown preset '" + c.preset + "'");
  }
  for (const auto& [k, v] : c.overrides) apply_train_key(c.train, k, v);
  c.gate.gamma = c.train.gamma;
  if (c.validation_env_seeds < 1) c.validation_env_seeds = c.opponent ? 3 : 1;
}

// `key = value` lines; '#' starts a comment.
inline RunConfig parse_run_config(std::istream& in, RunConfig base = {}) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(n) + ": expected key = value");
    try {
      apply_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return base;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_run_config(in, std::move(base));
}

inline std::string RunConfig::text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "grid = " << grid << "\nopponent = " << (opponent ? "true" : "false") << "\narchitecture = " << architecture
     << "\naction_space = " << to_string(action_space) << "\nlr = " << train.lr
     << "\ntrain_batch = " << train.train_batch << "\nminibatch = " << train.minibatch
     << "\nsgd_iters = " << train.sgd_iters << "\nclip = " << train.clip << "\nvf_clip = " << train.vf_clip
     << "\nvf_coef = " << train.vf_coef << "\nlambda = " << train.lambda << "\ngamma = " << train.gamma
     << "\nentropy_coef = " << train.entropy_coef << "\nmax_grad_norm = " << train.max_grad_norm
     << "\nhidden = " << train.hidden << "\nvalue_norm = " << (train.value_norm ? "true" : "false")
     << "\nbudget = " << budget << "\nvalidation_every = " << validation_every
     << "\nvalidation_env_seeds = " << validation_env_seeds << "\nn_scenarios = " << n_scenarios
     << "\nscenario_seed = " << scenario_seed << "\nsplit_seed = " << split_seed
     << "\nactivation_threshold = " << gate.activation_threshold << "\nrevert_threshold = " << gate.revert_threshold
     << "\nnight_revert = " << (gate.night_revert ? "true" : "false") << "\nseeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Workspace: grid, action space and scenarios shared by all seeds.

struct Workspace {
  GridModel grid;
  ActionSpace space;
  std::vector<ScenarioData> scenarios;
  ScenarioSplit split;
  std::vector<ScenarioData> train_chunks;
};

inline std::vector<ScenarioData> load_scenario_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<ScenarioData> out;
  for (const auto& f : files) out.push_back(read_scenario_csv(f));
  if (out.empty()) throw std::runtime_error("no scenario CSV files in '" + dir + "'");
  return out;
}

inline Workspace make_workspace(const RunConfig& c) {
  Workspace w;
  w.grid = load_grid(resolve_grid_path(c.grid));
  w.space = build_action_space(w.grid, c.action_space);
  w.scenarios = c.scenario_dir.empty() ? generate_scenarios(w.grid, c.n_scenarios, c.scenario_seed)
                                       : load_scenario_dir(c.scenario_dir);
  w.split = split_scenarios(static_cast<int>(w.scenarios.size()), c.split_seed);
  for (int id : w.split.train)
    for (auto& ch : chunk_scenario(w.scenarios[id], w.grid.steps_per_day)) w.train_chunks.push_back(std::move(ch));
  return w;
}

inline EnvConfig env_config(const RunConfig& c) {
  EnvConfig e;
  e.opponent = c.opponent;
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

struct SurvivalStats {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<int> survived;
};

inline SurvivalStats summarize(std::vector<int> v) {
  SurvivalStats s;
  s.survived = std::move(v);
  if (s.survived.empty()) return s;
  const double n = static_cast<double>(s.survived.size());
  s.mean = std::accumulate(s.survived.begin(), s.survived.end(), 0.0) / n;
  double q = 0.0;
  for (int x : s.survived) q += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(q / n);
  return s;
}

inline std::uint64_t env_seed_for(std::uint64_t base, int scenario, int k) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(scenario), static_cast<std::uint32_t>(k)};
  std::uint64_t out[1];
  std::uint32_t raw[2];
  seq.generate(raw, raw + 2);
  out[0] = (static_cast<std::uint64_t>(raw[0]) << 32) | raw[1];
  return out[0];
}

// Eval-mode episodes on full scenarios, env_seeds per scenario.
inline SurvivalStats evaluate_agent(const Workspace& w, const RunConfig& c, Agent& agent,
                                    std::span<const int> scenario_ids, int env_seeds, std::uint64_t base_seed,
                                    std::vector<json>* detail = nullptr) {
  Environment env(w.grid, w.space, env_config(c));
  std::vector<int> survived;
  for (int id : scenario_ids) {
    for (int k = 0; k < env_seeds; ++k) {
      env.reset(w.scenarios[id], env_seed_for(base_seed, id, k));
      const auto ep = controller_episode(env, agent, c.gate, RunMode::Eval);
      survived.push_back(ep.record.survived);
      if (detail)
        detail->push_back({{"scenario", w.scenarios[id].id},
                           {"env_seed_index", k},
                           {"survived", ep.record.survived},
                           {"length", ep.record.length},
                           {"agent_calls", ep.record.agent_calls},
                           {"reverts", ep.record.reverts}});
    }
  }
  return summarize(std::move(survived));
}

// ---------------------------------------------------------------------------
// Training

struct MetricsRow {
  std::int64_t env_steps = 0;
  double mean_survived = 0.0;
  double std_survived = 0.0;
  std::uint64_t seed = 0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> curve;
  PolicyMap policies;
  std::int64_t env_steps = 0;
  int updates = 0;
  int episodes = 0;
  int rollbacks = 0;
};

inline bool architecture_learns(const std::string& arch) {
  return arch != "do_nothing" && arch != "greedy" && arch != "greedy_capa" && arch != "greedy_random";
}

inline PolicyMap make_policies(const Workspace& w, const RunConfig& c, std::uint64_t seed) {
  PolicyMap pm;
  const int obs = ObservationLayout::for_grid(w.grid).size;
  for (const auto& [id, shape] : learner_shapes(c.architecture, w.space, obs))
    pm.emplace(id, make_policy(shape.inputs, shape.actions, c.train.hidden, seed * 7919 + 101 * id + 1,
                               c.train.value_norm));
  return pm;
}

inline std::string config_hash(const RunConfig& c) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(c.text());
  return os.str();
}

inline json checkpoint_json(const RunConfig& c, std::uint64_t seed, const PolicyMap& pm) {
  json j;
  j["format"] = "gridctl-checkpoint";
  j["version"] = 1;
  j["architecture"] = c.architecture;
  j["grid"] = c.grid;
  j["opponent"] = c.opponent;
  j["action_space"] = to_string(c.action_space);
  j["seed"] = seed;
  j["config_hash"] = config_hash(c);
  j["policies"] = json::object();
  for (const auto& [id, p] : pm) j["policies"][std::to_string(id)] = policy_to_json(p);
  return j;
}

inline void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << j.dump() << '\n';
}

inline PolicyMap policies_from_checkpoint(const json& j, const std::string& expected_arch, const Workspace& w) {
  if (j.value("format", "") != "gridctl-checkpoint") throw std::runtime_error("not a checkpoint file");
  if (j.at("architecture") != expected_arch)
    throw std::runtime_error("checkpoint holds architecture '" + j.at("architecture").get<std::string>() +
                             "', expected '" + expected_arch + "'");
  PolicyMap pm;
  for (const auto& [k, v] : j.at("policies").items()) pm.emplace(std::stoi(k), policy_from_json(v));
  const int obs = ObservationLayout::for_grid(w.grid).size;
  const auto shapes = learner_shapes(expected_arch, w.space, obs);
  if (shapes.size() != pm.size()) throw std::runtime_error("checkpoint learner count does not match the architecture");
  for (const auto& [id, s] : shapes) {
    auto it = pm.find(id);
    if (it == pm.end() || it->second.n_inputs() != s.inputs || it->second.n_actions() != s.actions)
      throw std::runtime_error("checkpoint learner " + std::to_string(id) + " does not match the grid/action space");
  }
  return pm;
}

using ProgressFn = std::function<void(const MetricsRow&)>;

inline SeedRun train_seed(const Workspace& w, const RunConfig& c, std::uint64_t seed,
                          const ProgressFn& progress = {}, const fs::path& ckpt_dir = {}) {
  SeedRun run;
  run.seed = seed;
  run.policies = make_policies(w, c, seed);
  const bool learns = architecture_learns(c.architecture);
  auto train_agent = compose_architecture(c.architecture, &run.policies, seed * 2654435761u + 17);
  Environment env(w.grid, w.space, env_config(c));
  ScenarioSampler sampler(static_cast<int>(w.train_chunks.size()));
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 3);
  std::mt19937_64 sgd_rng(seed + 0x51ed27);
  ExperienceBuffer buffers;
  const auto val_ids = std::span<const int>(w.split.validation);

  auto validate = [&] {
    auto agent = compose_architecture(c.architecture, &run.policies, seed * 31 + 7 + run.env_steps);
    const auto s = evaluate_agent(w, c, *agent, val_ids, c.opponent ? c.validation_env_seeds : 1, 1000 + seed);
    MetricsRow row{run.env_steps, s.mean, s.sd, seed};
    run.curve.push_back(row);
    if (progress) progress(row);
  };

  validate();
  if (!learns) return run;
  std::int64_t next_val = c.validation_every;
  int ckpt_mark = 0;
  while (run.env_steps < c.budget) {
    const int id = sampler.sample(rng);
    env.reset(w.train_chunks[id], rng());
    const auto ep = controller_episode(env, *train_agent, c.gate, RunMode::Train);
    sampler.update(id, ep.record.survived, ep.record.length);
    assign_smdp_credit(ep.transitions, ep.selections, run.episodes++, buffers);
    run.env_steps += ep.record.env_steps;

    std::vector<std::size_t> sizes;
    for (const auto& [lid, _] : run.policies) sizes.push_back(buffers.count(lid) ? buffers[lid].size() : 0);
    if (ready_to_train(sizes, static_cast<std::size_t>(c.train.train_batch))) {
      for (auto& [lid, p] : run.policies) {
        auto it = buffers.find(lid);
        if (it == buffers.end() || it->second.empty()) continue;
        const auto st = ppo_update(p, it->second, c.train, sgd_rng);
        if (st.rolled_back) ++run.rollbacks;
      }
      buffers.clear();
      ++run.updates;
      if (c.checkpoint_every > 0 && !ckpt_dir.empty() && run.updates / c.checkpoint_every > ckpt_mark) {
        ckpt_mark = run.updates / c.checkpoint_every;
        write_json(ckpt_dir / ("update_" + std::to_string(run.updates) + ".json"),
                   checkpoint_json(c, seed, run.policies));
      }
    }
    if (run.env_steps >= next_val || run.env_steps >= c.budget) {
      validate();
      next_val = (run.env_steps / c.validation_every + 1) * c.validation_every;
    }
  }
  return run;
}

inline void write_metrics_csv(const fs::path& p, std::span<const MetricsRow> rows, bool header = true) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  if (header) out << "env_steps,mean_survived,std_survived,seed\n";
  out << std::setprecision(10);
  for (const auto& r : rows) out << r.env_steps << ',' << r.mean_survived << ',' << r.std_survived << ',' << r.seed << '\n';
}

// Linear interpolation of a step curve at x, clamped at both ends.
inline double interpolate(std::span<const MetricsRow> curve, double x) {
  if (curve.empty()) return 0.0;
  if (x <= curve.front().env_steps) return curve.front().mean_survived;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (x <= curve[i].env_steps) {
      const double x0 = curve[i - 1].env_steps, x1 = curve[i].env_steps;
      const double t = (x - x0) / (x1 - x0);
      return curve[i - 1].mean_survived + t * (curve[i].mean_survived - curve[i - 1].mean_survived);
    }
  }
  return curve.back().mean_survived;
}

struct AggregatePoint {
  double env_steps = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

// Seed curves interpolated onto a common axis in [0, max_steps], then averaged.
inline std::vector<AggregatePoint> aggregate_curves(std::span<const std::vector<MetricsRow>> curves, double max_steps,
                                                    int points) {
  std::vector<AggregatePoint> out;
  if (curves.empty() || points < 2) return out;
  for (int i = 0; i < points; ++i) {
    AggregatePoint a;
    a.env_steps = max_steps * i / (points - 1);
    std::vector<double> v;
    for (const auto& c : curves) v.push_back(interpolate(c, a.env_steps));
    a.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double q = 0.0;
    for (double x : v) q += (x - a.mean) * (x - a.mean);
    a.sd = std::sqrt(q / v.size());
    out.push_back(a);
  }
  return out;
}

// Trapezoid area under an aggregated curve up to x_max.
inline double area_under_curve(std::span<const AggregatePoint> pts, double x_max) {
  double a = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i - 1].env_steps >= x_max) break;
    const double x1 = std::min(pts[i].env_steps, x_max);
    const double t = (x1 - pts[i - 1].env_steps) / (pts[i].env_steps - pts[i - 1].env_steps);
    const double y1 = pts[i - 1].mean + t * (pts[i].mean - pts[i - 1].mean);
    a += 0.5 * (pts[i - 1].mean + y1) * (x1 - pts[i - 1].env_steps);
  }
  return a;
}

// Runs every seed, in parallel up to c.jobs.
inline std::vector<SeedRun> train_all(const Workspace& w, const RunConfig& c, const ProgressFn& progress = {},
                                      const fs::path& run_dir = {}) {
  std::vector<SeedRun> out(c.seeds.size());
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, c.jobs));
  for (std::size_t start = 0; start < c.seeds.size(); start += jobs) {
    std::vector<std::future<SeedRun>> fut;
    for (std::size_t i = start; i < std::min(c.seeds.size(), start + jobs); ++i) {
      const auto seed = c.seeds[i];
      const fs::path dir = run_dir.empty() ? fs::path{} : run_dir / ("seed_" + std::to_string(seed));
      fut.push_back(std::async(std::launch::async, [&, seed, dir] { return train_seed(w, c, seed, progress, dir); }));
    }
    for (std::size_t i = 0; i < fut.size(); ++i) out[start + i] = fut[i].get();
  }
  return out;
}

inline std::string format_mean_sd(double mean, double sd) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << mean << " (" << sd << ")";
  return os.str();
}

}  // namespace gridctl

#endif  // GRIDCTL_EXPERIMENT_HPP_
