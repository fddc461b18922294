#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "isacdt/agent.hpp"
#include "isacdt/sim.hpp"

namespace fs = std::filesystem;
using namespace isacdt;

namespace {

struct Common {
  std::string scenario_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string mode;
  std::string sensing;
  int episodes = 100;
  std::string out = "out";
  std::string policy_path;
};

ScenarioConfig load(const Common& c) {
  ScenarioConfig s = c.scenario_path.empty() ? ScenarioConfig{} : load_scenario(c.scenario_path);
  if (c.seed_set) s.seed = c.seed;
  if (!c.mode.empty()) s.allocator_mode = parse_alloc_mode(c.mode);
  if (!c.sensing.empty()) s.sensing = parse_sensing_mode(c.sensing);
  s.validate();
  return s;
}

PolicyFn load_policy(const Common& c) {
  if (c.policy_path.empty()) {
    std::cerr << "no --policy given; using the scripted energy-pump policy at eta = 1e5\n";
    return energy_pump_policy(1e5);
  }
  return as_policy_fn(load_checkpoint(c.policy_path).policy);
}

void add_common(CLI::App* sub, Common& c, bool with_mode) {
  sub->add_option("--scenario", c.scenario_path, "Scenario file (key = value lines)")->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& v) { c.seed = v, c.seed_set = true; }, "Base seed");
  sub->add_option("--out", c.out, "Output directory");
  if (with_mode) {
    sub->add_option("--mode", c.mode, "Allocator mode")->check(CLI::IsMember({"cp", "sp", "equal"}));
    sub->add_option("--episodes", c.episodes, "Episodes per mode")->check(CLI::PositiveNumber);
    sub->add_option("--policy", c.policy_path, "Policy checkpoint")->check(CLI::ExistingFile);
  }
  sub->add_option("--sensing", c.sensing, "Measurement model")->check(CLI::IsMember({"crb", "signal", "perfect"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC digital-twin AGV simulator"};
  app.require_subcommand(1);
  Common c;

  auto* train_cmd = app.add_subcommand("train", "Train a controller and write policy.json");
  add_common(train_cmd, c, false);
  long steps = 500000;
  int sign = -1;
  train_cmd->add_option("--steps", steps, "Environment steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--eta-sign", sign, "Sign of the accuracy term in the reward")->check(CLI::IsMember({-1, 1}));

  auto* run_cmd = app.add_subcommand("run", "Run episodes in one allocator mode");
  add_common(run_cmd, c, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Sensing/communication trade-off sweep");
  add_common(sweep_cmd, c, false);
  auto* cdf_cmd = app.add_subcommand("cdf", "Run all allocator modes and write CDF tables");
  add_common(cdf_cmd, c, true);

  CLI11_PARSE(app, argc, argv);

  try {
    ScenarioConfig s = load(c);
    fs::create_directories(c.out);
    const auto path = [&](const char* name) { return (fs::path(c.out) / name).string(); };

    if (*train_cmd) {
      s.reward.eta_cost_sign = sign;
      IsacEnv env(s);
      TrainConfig cfg;
      cfg.total_steps = steps;
      cfg.reward = s.reward;
      const TrainResult r = train(env, cfg, s.seed);
      std::FILE* f = std::fopen(path("train_curve.csv").c_str(), "w");
      if (!f) throw std::runtime_error("cannot write train_curve.csv");
      std::fprintf(f, "update,env_steps,episodes,mean_return,train_success,policy_loss,value_loss,mean_eta,eval_success\n");
      for (const auto& e : r.curve)
        std::fprintf(f, "%d,%ld,%d,%s,%s,%s,%s,%s,%s\n", e.update, e.env_steps, e.episodes_finished,
                     format_double(e.mean_episode_return).c_str(), format_double(e.train_success).c_str(),
                     format_double(e.policy_loss).c_str(), format_double(e.value_loss).c_str(),
                     format_double(e.mean_eta).c_str(), e.evaluated ? format_double(e.eval_success).c_str() : "");
      std::fclose(f);
      save_checkpoint(path("policy.json"), r.policy, cfg);
      std::printf("trained %ld steps, best evaluation success %.2f -> %s\n", r.env_steps, r.best_eval_success,
                  path("policy.json").c_str());
    } else if (*run_cmd) {
      const ModeResult m = run_mode(s, load_policy(c), c.episodes);
      write_episodes_csv(path("episodes.csv"), {m});
      write_summary_json(path("summary.json"), s, {m});
      std::printf("%s: success %.3f, rate met %.3f, median QIs %.1f\n", to_string(m.mode).c_str(), m.success_rate,
                  m.rate_met_fraction, m.median_qis_to_goal);
    } else if (*sweep_cmd) {
      write_tradeoff_csv(path("tradeoff.csv"), tradeoff_sweep(s, {5.0, 10.0, 20.0, 30.0}));
      std::printf("wrote %s\n", path("tradeoff.csv").c_str());
    } else if (*cdf_cmd) {
      std::vector<AllocMode> modes = {AllocMode::CommPriority, AllocMode::SensingPriority, AllocMode::Equal};
      if (!c.mode.empty()) modes = {parse_alloc_mode(c.mode)};
      const ExperimentResult r = run_experiment(s, load_policy(c), c.episodes, modes);
      write_episodes_csv(path("episodes.csv"), r.modes);
      write_summary_json(path("summary.json"), s, r.modes);
      write_cdf_rate_csv(path("cdf_rate.csv"), r.modes);
      write_cdf_qi_csv(path("cdf_qi.csv"), r.modes);
      write_tradeoff_csv(path("tradeoff.csv"), r.tradeoff);
      for (const auto& m : r.modes)
        std::printf("%-5s success %.3f  rate met %.3f  median QIs %.1f\n", to_string(m.mode).c_str(), m.success_rate,
                    m.rate_met_fraction, m.median_qis_to_goal);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
