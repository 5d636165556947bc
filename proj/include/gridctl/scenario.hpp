#ifndef GRIDCTL_SCENARIO_HPP_
#define GRIDCTL_SCENARIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridctl/grid_model.hpp"

namespace gridctl {

// Per-timestep injections. Row-major: load_mw[t * n_loads + i].
struct ScenarioData {
  std::string id;
  int n_loads = 0;
  int n_generators = 0;
  int start_offset = 0;  // steps after midnight of the first timestep
  std::vector<double> load_mw;
  std::vector<double> gen_mw;

  int length() const { return n_loads > 0 ? static_cast<int>(load_mw.size()) / n_loads : 0; }
  std::span<const double> loads_at(int t) const {
    return {load_mw.data() + static_cast<std::size_t>(t) * n_loads, static_cast<std::size_t>(n_loads)};
  }
  std::span<const double> gens_at(int t) const {
    return {gen_mw.data() + static_cast<std::size_t>(t) * n_generators,
            static_cast<std::size_t>(n_generators)};
  }
  bool operator==(const ScenarioData&) const = default;
};

inline double hour_of_day(int step_from_midnight, int steps_per_day) {
  const int s = ((step_from_midnight % steps_per_day) + steps_per_day) % steps_per_day;
  return 24.0 * s / steps_per_day;
}

// Shape knobs of the synthetic load curves.
struct ScenarioGenConfig {
  int length = 0;  // 0: the grid's scenario_length
  double night_level = 0.55;
  double morning_peak = 0.30;  // added at ~09:00
  double evening_peak = 0.45;  // added at ~19:00
  double peak_width_h = 2.5;
  double scenario_scale_min = 0.92;
  double scenario_scale_max = 1.08;
  double day_scale_sd = 0.03;
  double load_noise_sd = 0.015;
  double load_phase_sd_h = 0.5;
};

inline double diurnal_profile(double hour, const ScenarioGenConfig& c) {
  auto bump = [&](double centre) {
    double d = std::abs(hour - centre);
    d = std::min(d, 24.0 - d);
    return std::exp(-(d / c.peak_width_h) * (d / c.peak_width_h));
  };
  return c.night_level + c.morning_peak * bump(9.0) + c.evening_peak * bump(19.0);
}

// Deterministic given (grid, count, seed). Loads follow a two-peak diurnal curve
// with per-scenario, per-day and per-load variation; generation is dispatched in
// proportion to nominal capacity so every timestep is balanced.
inline std::vector<ScenarioData> generate_scenarios(const GridModel& grid, int count,
                                                    std::uint64_t seed,
                                                    const ScenarioGenConfig& cfg = {}) {
  if (count < 1) throw std::invalid_argument("scenario count must be >= 1");
  double cap_total = 0.0;
  for (const auto& g : grid.generators) cap_total += g.p_mw_nominal;
  if (!(cap_total > 0.0)) throw std::invalid_argument("grid has no generation capacity");
  const int nl = grid.n_loads(), ng = grid.n_generators();
  const int spd = grid.steps_per_day;
  const int length = cfg.length > 0 ? cfg.length : grid.scenario_length;
  std::vector<ScenarioData> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), 0x5ce7u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    ScenarioData s;
    s.id = grid.name + "_" + std::to_string(k);
    s.n_loads = nl;
    s.n_generators = ng;
    s.start_offset = static_cast<int>(unif(rng) * spd / 4);  // within [00:00, 06:00)
    const double scale =
        cfg.scenario_scale_min + (cfg.scenario_scale_max - cfg.scenario_scale_min) * unif(rng);
    std::vector<double> phase(nl);
    for (auto& p : phase) p = cfg.load_phase_sd_h * normal(rng);
    const int n_days = (s.start_offset + length) / spd + 2;
    std::vector<double> day_scale(n_days);
    for (auto& d : day_scale) d = 1.0 + cfg.day_scale_sd * normal(rng);
    std::vector<double> noise(nl, 0.0);

    s.load_mw.resize(static_cast<std::size_t>(length) * nl);
    s.gen_mw.resize(static_cast<std::size_t>(length) * ng);
    for (int t = 0; t < length; ++t) {
      const int abs_t = s.start_offset + t;
      const double hour = hour_of_day(abs_t, spd);
      double total = 0.0;
      for (int i = 0; i < nl; ++i) {
        // AR(1) noise keeps consecutive steps correlated.
        noise[i] = 0.9 * noise[i] + std::sqrt(1.0 - 0.81) * cfg.load_noise_sd * normal(rng);
        double h = std::fmod(hour + phase[i] + 24.0, 24.0);
        const double v = grid.loads[i].p_mw_nominal * scale * day_scale[abs_t / spd] *
                         diurnal_profile(h, cfg) * (1.0 + noise[i]);
        s.load_mw[static_cast<std::size_t>(t) * nl + i] = std::max(0.0, v);
        total += s.load_mw[static_cast<std::size_t>(t) * nl + i];
      }
      for (int j = 0; j < ng; ++j)
        s.gen_mw[static_cast<std::size_t>(t) * ng + j] = total * grid.generators[j].p_mw_nominal / cap_total;
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Two-day chunks; every chunk starts at the same hour as the scenario (night).
// The trailing remainder is attached to the last chunk.
inline std::vector<ScenarioData> chunk_scenario(const ScenarioData& s, int steps_per_day = 288) {
  const int chunk = 2 * steps_per_day;
  const int len = s.length();
  if (len < chunk) throw std::invalid_argument("scenario shorter than one two-day chunk");
  const int n_chunks = len / chunk;
  std::vector<ScenarioData> out;
  for (int c = 0; c < n_chunks; ++c) {
    const int begin = c * chunk;
    const int end = (c == n_chunks - 1) ? len : begin + chunk;
    ScenarioData part;
    part.id = s.id + "_c" + std::to_string(c);
    part.n_loads = s.n_loads;
    part.n_generators = s.n_generators;
    part.start_offset = s.start_offset + begin;
    part.load_mw.assign(s.load_mw.begin() + static_cast<std::ptrdiff_t>(begin) * s.n_loads,
                        s.load_mw.begin() + static_cast<std::ptrdiff_t>(end) * s.n_loads);
    part.gen_mw.assign(s.gen_mw.begin() + static_cast<std::ptrdiff_t>(begin) * s.n_generators,
                       s.gen_mw.begin() + static_cast<std::ptrdiff_t>(end) * s.n_generators);
    out.push_back(std::move(part));
  }
  return out;
}

// w = 1 - 2 sqrt(t_survived / t_max), in [-1, 1].
inline double scenario_priority(double t_survived, double t_max) {
  if (!(t_max > 0.0)) throw std::domain_error("t_max must be positive");
  const double frac = std::clamp(t_survived / t_max, 0.0, 1.0);
  return 1.0 - 2.0 * std::sqrt(frac);
}

inline constexpr double kUnseenScenarioLogit = 2.0;

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

// Draws an index from a probability vector by inverse CDF.
inline int sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

class ScenarioSampler {
 public:
  explicit ScenarioSampler(int n_scenarios)
      : logits_(n_scenarios, kUnseenScenarioLogit), seen_(n_scenarios, 0) {
    if (n_scenarios < 1) throw std::invalid_argument("sampler needs at least one scenario");
  }

  int size() const { return static_cast<int>(logits_.size()); }
  double logit(int id) const { return logits_.at(id); }
  bool seen(int id) const { return seen_.at(id) != 0; }
  std::vector<double> probabilities() const { return softmax(logits_); }

  int sample(std::mt19937_64& rng) const {
    const auto p = probabilities();
    return sample_categorical(p, rng);
  }

  // Called once the episode on scenario `id` has finished.
  void update(int id, int t_survived, int t_max) {
    logits_.at(id) = scenario_priority(t_survived, t_max);
    seen_.at(id) = 1;
  }

 private:
  std::vector<double> logits_;
  std::vector<char> seen_;
};

struct ScenarioSplit {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

// 70/10/20: train rounded to nearest, validation floored, remainder to test.
inline ScenarioSplit split_scenarios(int n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("need at least 10 scenarios to split");
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const int n_train = static_cast<int>(std::lround(0.7 * n));
  const int n_val = static_cast<int>(std::floor(0.1 * n + 1e-9));
  ScenarioSplit split;
  split.train.assign(ids.begin(), ids.begin() + n_train);
  split.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  split.test.assign(ids.begin() + n_train + n_val, ids.end());
  for (auto* v : {&split.train, &split.validation, &split.test}) std::sort(v->begin(), v->end());
  return split;
}

// ---------------------------------------------------------------------------
// Opponent

struct AttackEvent {
  int line = -1;
  int start = 0;
  int duration = 48;
};

struct OpponentConfig {
  std::vector<int> attackable;
  int duration = 48;
  int cooldown = 144;
  int window = 96;  // attack start drawn uniformly within this many steps of eligibility
};

struct OpponentState {
  int last_attack_end = std::numeric_limits<int>::min() / 2;
  int planned_start = -1;
};

inline std::optional<AttackEvent> opponent_schedule(std::mt19937_64& rng, int t_now, OpponentState& st,
                                                    const OpponentConfig& cfg) {
  if (cfg.attackable.empty()) return std::nullopt;
  if (t_now < st.last_attack_end + cfg.cooldown) return std::nullopt;
  if (st.planned_start < 0)
    st.planned_start = t_now + std::uniform_int_distribution<int>(0, cfg.window - 1)(rng);
  if (t_now < st.planned_start) return std::nullopt;
  const int idx = std::uniform_int_distribution<int>(0, static_cast<int>(cfg.attackable.size()) - 1)(rng);
  AttackEvent ev{cfg.attackable[idx], t_now, cfg.duration};
  st.last_attack_end = t_now + cfg.duration;
  st.planned_start = -1;
  return ev;
}

// ---------------------------------------------------------------------------
// CSV files: columns t, load_<i>..., gen_<j>...; t counts steps from midnight of day 0.

inline void write_scenario_csv(const ScenarioData& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t";
  for (int i = 0; i < s.n_loads; ++i) out << ",load_" << i;
  for (int j = 0; j < s.n_generators; ++j) out << ",gen_" << j;
  out << '\n';
  out.precision(17);
  for (int t = 0; t < s.length(); ++t) {
    out << s.start_offset + t;
    for (double v : s.loads_at(t)) out << ',' << v;
    for (double v : s.gens_at(t)) out << ',' << v;
    out << '\n';
  }
}

inline ScenarioData read_scenario_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  ScenarioData s;
  s.id = path.stem().string();
  std::string line;
  std::getline(in, line);
  std::vector<int> kinds;  // 0 load, 1 gen
  {
    std::stringstream ss(line);
    std::string col;
    std::getline(ss, col, ',');
    while (std::getline(ss, col, ',')) {
      if (col.rfind("load_", 0) == 0) {
        kinds.push_back(0);
        ++s.n_loads;
      } else if (col.rfind("gen_", 0) == 0) {
        kinds.push_back(1);
        ++s.n_generators;
      } else {
        throw std::runtime_error(path.string() + ": unexpected column '" + col + "'");
      }
    }
  }
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (first) {
      s.start_offset = std::stoi(cell);
      first = false;
    }
    for (int k : kinds) {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error(path.string() + ": short row");
      (k == 0 ? s.load_mw : s.gen_mw).push_back(std::stod(cell));
    }
  }
  return s;
}

}  // namespace gridctl

#endif  // GRIDCTL_SCENARIO_HPP_
