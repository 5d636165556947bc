#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridctl/gridctl.hpp"

namespace fs = std::filesystem;
using namespace gridctl;

namespace {

int cmd_enumerate(const std::string& grid_name, const std::string& mode_arg, const std::string& out,
                  bool check_closed_form) {
  const auto grid = load_grid(resolve_grid_path(grid_name));
  std::vector<ActionSpaceMode> modes;
  if (mode_arg == "both") modes = {ActionSpaceMode::SymmetryFiltered, ActionSpaceMode::N1Secure};
  else modes = {parse_action_space_mode(mode_arg)};

  bool mismatch = false;
  json report;
  report["grid"] = grid.name;
  for (auto mode : modes) {
    const auto space = build_action_space(grid, mode);
    std::cout << "grid " << grid.name << ", mode " << to_string(mode) << "\n";
    std::cout << "  sub  lines  inj  brute  closed  actions\n";
    json subs = json::array();
    for (const auto& s : grid.substations) {
      const auto brute = static_cast<std::int64_t>(space.per_sub[s.id].size());
      std::int64_t closed = 0;
      if (s.n_lines >= 1) closed = closed_form_count(s.n_lines, s.n_injections, mode);
      const bool ok = s.n_lines < 1 || closed == brute;
      mismatch = mismatch || !ok;
      const std::int64_t contributed = brute > 1 ? brute : 0;
      std::cout << "  " << std::setw(3) << s.id << "  " << std::setw(5) << s.n_lines << "  " << std::setw(3)
                << s.n_injections << "  " << std::setw(5) << brute << "  " << std::setw(6) << closed << "  "
                << std::setw(7) << contributed << (ok ? "" : "  MISMATCH") << "\n";
      subs.push_back({{"substation", s.id},
                      {"lines", s.n_lines},
                      {"injections", s.n_injections},
                      {"brute_force", brute},
                      {"closed_form", closed},
                      {"actions", contributed}});
    }
    const auto topologies = count_global_topologies(grid, mode);
    std::ostringstream sci;
    sci << std::scientific << std::setprecision(2) << static_cast<double>(topologies);
    std::cout << "  total actions " << space.size() << ", global topologies " << topologies << " (" << sci.str()
              << ")\n";
    auto mj = to_json(grid, space);
    mj["substations"] = subs;
    mj["global_topologies"] = topologies;
    report[to_string(mode)] = mj;
  }
  if (check_closed_form) std::cout << (mismatch ? "closed form: MISMATCH\n" : "closed form: agrees\n");
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << report.dump(2) << '\n';
  }
  return mismatch ? 2 : 0;
}

int cmd_generate(const std::string& grid_name, int count, std::uint64_t seed, std::uint64_t split_seed,
                 const std::string& out) {
  const auto grid = load_grid(resolve_grid_path(grid_name));
  const auto scenarios = generate_scenarios(grid, count, seed);
  const fs::path dir = fs::path(out) / grid.name;
  fs::create_directories(dir);
  for (const auto& s : scenarios) write_scenario_csv(s, dir / (s.id + ".csv"));
  const auto split = split_scenarios(count, split_seed);
  auto names = [&](const std::vector<int>& ids) {
    std::vector<std::string> v;
    for (int i : ids) v.push_back(scenarios[i].id);
    return v;
  };
  json j{{"grid", grid.name},
         {"seed", seed},
         {"split_seed", split_seed},
         {"train", names(split.train)},
         {"validation", names(split.validation)},
         {"test", names(split.test)}};
  std::ofstream(dir / "split.json") << j.dump(2) << '\n';
  std::cout << "wrote " << scenarios.size() << " scenarios to " << dir.string() << " (train " << split.train.size()
            << ", validation " << split.validation.size() << ", test " << split.test.size() << ")\n";
  return 0;
}

fs::path run_directory(const RunConfig& c) {
  return fs::path(c.out_dir) / (c.grid + "_" + (c.opponent ? "opponent" : "regular") + "_" + c.architecture);
}

void train_one(RunConfig c) {
  finalize(c);
  c.validate();
  const auto w = make_workspace(c);
  const auto dir = run_directory(c);
  fs::create_directories(dir);
  std::ofstream(dir / "config.txt") << c.text();
  std::cout << "training " << c.architecture << " on " << c.grid << (c.opponent ? " with" : " without")
            << " opponent, " << c.seeds.size() << " seed(s), budget " << c.budget << ", preset "
            << (c.preset.empty() ? "none" : c.preset) << "\n";
  std::mutex mu;
  auto progress = [&](const MetricsRow& r) {
    std::lock_guard lock(mu);
    std::cout << "  seed " << r.seed << "  env_steps " << std::setw(7) << r.env_steps << "  survived "
              << format_mean_sd(r.mean_survived, r.std_survived) << "\n";
  };
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = train_all(w, c, progress, dir);
  std::vector<MetricsRow> all;
  std::vector<std::vector<MetricsRow>> curves;
  for (const auto& r : runs) {
    all.insert(all.end(), r.curve.begin(), r.curve.end());
    curves.push_back(r.curve);
    const auto sd = dir / ("seed_" + std::to_string(r.seed));
    write_metrics_csv(sd / "metrics.csv", r.curve);
    if (!r.policies.empty()) write_json(sd / "final.json", checkpoint_json(c, r.seed, r.policies));
  }
  write_metrics_csv(dir / "metrics.csv", all);
  const auto agg = aggregate_curves(curves, static_cast<double>(c.budget), 101);
  std::ofstream a(dir / "aggregate.csv");
  a << "env_steps,mean_survived,std_survived\n";
  for (const auto& p : agg) a << p.env_steps << ',' << p.mean << ',' << p.sd << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "done in " << std::fixed << std::setprecision(1) << secs << " s; metrics in " << dir.string() << "\n";
}

int cmd_evaluate(RunConfig c, const std::string& run_dir, const std::string& out) {
  finalize(c);
  c.validate();
  const auto w = make_workspace(c);
  const int env_seeds = c.opponent ? c.eval_env_seeds : 1;
  json detail = json::array();
  std::vector<int> all;
  const bool learns = architecture_learns(c.architecture);
  std::vector<std::uint64_t> seeds = learns ? c.seeds : std::vector<std::uint64_t>{c.seeds.front()};
  for (auto seed : seeds) {
    PolicyMap pm;
    if (learns) {
      if (run_dir.empty()) throw std::invalid_argument("evaluating a learned architecture needs --run-dir");
      const auto path = fs::path(run_dir) / ("seed_" + std::to_string(seed)) / "final.json";
      std::ifstream in(path);
      if (!in) throw std::runtime_error("missing checkpoint '" + path.string() + "'");
      pm = policies_from_checkpoint(json::parse(in), c.architecture, w);
    }
    auto agent = compose_architecture(c.architecture, &pm, seed * 31 + 99991);
    std::vector<json> rows;
    const auto s = evaluate_agent(w, c, *agent, w.split.test, env_seeds, 5000 + seed, &rows);
    for (auto& r : rows) {
      r["model_seed"] = seed;
      detail.push_back(r);
    }
    all.insert(all.end(), s.survived.begin(), s.survived.end());
  }
  const auto s = summarize(all);
  std::ostringstream md;
  md << "| Agent | " << c.grid << (c.opponent ? " with opponent" : " without opponent") << " |\n";
  md << "|---|---|\n";
  md << "| " << c.architecture << " | " << format_mean_sd(s.mean, s.sd) << " |\n";
  std::cout << md.str();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream(fs::path(out) / ("report_" + c.architecture + ".md")) << md.str();
    json j{{"architecture", c.architecture}, {"grid", c.grid},   {"opponent", c.opponent},
           {"mean_survived", s.mean},        {"sd_survived", s.sd}, {"episodes", detail}};
    std::ofstream(fs::path(out) / ("report_" + c.architecture + ".json")) << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology control experiments on small power grids"};
  app.require_subcommand(1);

  auto* en = app.add_subcommand("enumerate", "count topological actions per substation");
  std::string en_grid = "case5", en_mode = "both", en_out;
  bool en_check = false;
  en->add_option("--grid", en_grid, "bundled grid name or JSON path");
  en->add_option("--mode", en_mode, "sym, n1 or both")->check(CLI::IsMember({"sym", "n1", "both"}));
  en->add_option("--out", en_out, "write the action list as JSON");
  en->add_flag("--check-closed-form", en_check, "compare the closed-form counts with enumeration");

  auto* gen = app.add_subcommand("generate-scenarios", "write synthetic scenarios as CSV");
  std::string gen_grid = "case5", gen_out = "scenarios";
  int gen_count = 20;
  std::uint64_t gen_seed = 7, gen_split = 0;
  gen->add_option("--grid", gen_grid);
  gen->add_option("--count", gen_count)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--split-seed", gen_split);
  gen->add_option("--out", gen_out);

  // Options shared by train and evaluate; explicit flags override the config file.
  std::string config_file, grid, arch, seeds, out_dir;
  std::vector<std::string> sets;
  bool opponent = false;
  std::int64_t budget = -1;
  int jobs = 0;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", config_file, "key = value config file");
    s->add_option("--grid", grid);
    s->add_option("--arch,--architecture", arch);
    s->add_flag("--opponent", opponent);
    s->add_option("--seeds", seeds, "e.g. 0-9 or 1,3,5");
    s->add_option("--set", sets, "extra key=value settings");
    s->add_option("--jobs", jobs);
  };

  auto* tr = app.add_subcommand("train", "train an architecture over several seeds");
  add_common(tr);
  int ckpt_every = 0;
  std::vector<std::string> sweep;
  tr->add_option("--budget", budget, "environment interactions per seed");
  tr->add_option("--out", out_dir, "output directory");
  tr->add_option("--checkpoint-every", ckpt_every, "write a checkpoint every N updates");
  tr->add_option("--sweep", sweep, "run each listed config file in turn");

  auto* ev = app.add_subcommand("evaluate", "evaluate on the test scenarios");
  add_common(ev);
  std::string run_dir, report_out;
  ev->add_option("--run-dir", run_dir, "directory written by train");
  ev->add_option("--out", report_out, "directory for the Markdown and JSON report");

  CLI11_PARSE(app, argc, argv);

  auto build_config = [&](const std::string& file) {
    RunConfig c;
    if (!file.empty()) c = load_run_config(file);
    if (!grid.empty()) c.grid = grid;
    if (!arch.empty()) c.architecture = arch;
    if (opponent) c.opponent = true;
    if (!seeds.empty()) c.seeds = parse_seed_list(seeds);
    if (budget >= 0) c.budget = budget;
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (jobs > 0) c.jobs = jobs;
    if (ckpt_every > 0) c.checkpoint_every = ckpt_every;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      apply_key(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    return c;
  };

  try {
    if (*en) return cmd_enumerate(en_grid, en_mode, en_out, en_check);
    if (*gen) return cmd_generate(gen_grid, gen_count, gen_seed, gen_split, gen_out);
    if (*tr) {
      if (sweep.empty()) {
        train_one(build_config(config_file));
      } else {
        for (const auto& f : sweep) train_one(build_config(f));
      }
      return 0;
    }
    if (*ev) {
      const bool from_run = config_file.empty() && !run_dir.empty();
      RunConfig base = build_config(from_run ? (fs::path(run_dir) / "config.txt").string() : config_file);
      return cmd_evaluate(base, run_dir, report_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
