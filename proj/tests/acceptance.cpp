// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isacdt/agent.hpp"
#include "isacdt/comms.hpp"
#include "isacdt/sensing.hpp"
#include "isacdt/sim.hpp"
#include "isacdt/uncertainty.hpp"

using namespace isacdt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, Outcome o, double secs, double limit_s) {
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += " [over the time limit]";
  }
  std::printf("[%s] criterion %d: %s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
  return buf;
}

// Capacity bookkeeping over every QI logged by criteria 5-7.
long long qis_logged = 0;
long long capacity_violations = 0;

void audit(const std::vector<EpisodeLog>& logs, int total) {
  for (const auto& l : logs)
    for (const auto& r : l.records) {
      ++qis_logged;
      if (r.allocation.n_s + r.allocation.n_c > total || r.allocation.n_s < 0 || r.allocation.n_c < 0)
        ++capacity_violations;
    }
}

// ---------------------------------------------------------------------------

Outcome moments_vs_monte_carlo() {
  Rng rng(20240101);
  std::uniform_real_distribution<double> ur(5, 30), usr(0.001, 1.0), ut(0.0, 1.2), ust(0.001, 0.3);
  const int samples = 1000000;
  int ok = 0;
  double worst_z = 0, worst_rel = 0;
  for (int k = 0; k < 20; ++k) {
    const double r = ur(rng), sr = usr(rng), th = ut(rng), st = ust(rng);
    std::normal_distribution<double> nr(r, sr), nt(th, st);
    double s = 0, s2 = 0;
    for (int i = 0; i < samples; ++i) {
      const double x = nr(rng) * std::cos(nt(rng));
      s += x;
      s2 += x * x;
    }
    const double mean = s / samples;
    const double var = (s2 - samples * mean * mean) / (samples - 1);
    const PositionBelief p = position_moments({r, sr * sr, th, st * st});
    const double z = std::abs(p.x_mean - mean) / std::sqrt(var / samples);
    const double rel = std::abs(p.x_var - var) / var;
    worst_z = std::max(worst_z, z);
    worst_rel = std::max(worst_rel, rel);
    if (z <= 3.0 && rel <= 0.01) ++ok;
  }
  return {ok == 20, fmt("%.0f/20 tuples; worst mean error %.2f SE, worst variance error %.3f%%", ok, worst_z, 100 * worst_rel)};
}

Outcome demand_equivalence(const ScenarioConfig& s) {
  const OfdmConfig& cfg = s.ofdm;
  const PilotConfig pilots = effective_pilots(s);
  Rng rng(777);
  int sense_checked = 0, sense_ok = 0, comm_checked = 0, comm_ok = 0;
  {
    std::uniform_real_distribution<double> ut(0.0, 1.2), ug(10, 60), ux(-3, 0), ur(5, 35);
    for (int i = 0; i < 500; ++i) {
      const double theta = ut(rng), gamma = db_to_linear(ug(rng)), xi = std::pow(10.0, ux(rng)), r = ur(rng);
      const double st = elevation_crb_std(cfg, gamma, theta);
      const AccuracyTarget t = AccuracyTarget::make(xi, 1.0);
      const PolarBelief b{r, 0.0, theta, st * st};
      int scan = -1;
      for (int n = 2; n <= cfg.num_subcarriers && scan < 0; ++n) {
        PolarBelief q = b;
        const double sr = range_crb_std(cfg, n, gamma);
        q.r_var = sr * sr;
        if (position_moments(q).x_var <= t.xibar_sq) scan = n;
      }
      const SensingDemand d = required_sensing_subcarriers(t, b, gamma, cfg);
      if (scan > 0) {
        ++sense_checked;
        if (d.count == scan) ++sense_ok;
      } else if (d.count <= cfg.num_subcarriers) {
        ++sense_checked;  // claims feasibility the scan could not find
      }
    }
  }
  {
    std::uniform_real_distribution<double> ur(1.0, 60.0), ut(1e6, 1.5e9);
    for (int i = 0; i < 500; ++i) {
      const double r = ur(rng), target = ut(rng);
      int scan = -1;
      for (int n = 1; n <= cfg.num_subcarriers && scan < 0; ++n)
        if (link_stats(cfg, pilots, n, r).rate_bps >= target) scan = n;
      const CommDemand d = required_comm_subcarriers(cfg, pilots, target, r);
      if (scan > 0) {
        ++comm_checked;
        if (d.count == scan) ++comm_ok;
      } else if (!d.overflow) {
        ++comm_checked;
      }
    }
  }
  const bool pass = sense_ok == sense_checked && comm_ok == comm_checked && sense_checked > 0 && comm_checked > 0;
  return {pass, fmt("sensing %.0f/%.0f, communication %.0f/%.0f feasible draws agree", sense_ok, sense_checked,
                    comm_ok, comm_checked)};
}

Outcome periodogram_fidelity(const ScenarioConfig& s) {
  const OfdmConfig& cfg = s.ofdm;
  const double c = kSpeedOfLight;
  PeriodogramEngine engine(cfg.periodogram_subcarriers, cfg.periodogram_symbols);
  int exact = 0, total = 0;
  for (double r : {5.0, 10.0, 20.0, 30.0})
    for (double v : {0.0, 2.0, 5.0}) {
      const FrameMatrix f = synthesize_frame(cfg, cfg.num_subcarriers, r, v, 11, 0.0);
      const PeriodogramPeak p = engine.find_peak(f, cfg);
      const long n_hat = std::lround(2 * r * cfg.subcarrier_spacing_hz * cfg.periodogram_subcarriers / c);
      const long m_hat = std::lround(2 * v * cfg.carrier_hz * cfg.symbol_duration_s * cfg.periodogram_symbols / c);
      ++total;
      if (p.range_bin == n_hat && p.doppler_bin == m_hat) ++exact;
    }

  // 500 noisy frames at a fixed frame SNR, noise scaled up from the 20 m link budget.
  const double r = 20.0, v = 5.0;
  const int n_s = 64;
  const double bin = c / (2 * cfg.subcarrier_spacing_hz * cfg.periodogram_subcarriers);
  struct Stat {
    double rmse, sigma_r;
  };
  const auto monte_carlo = [&](double snr_db) {
    const double g = db_to_linear(snr_db);
    const double noise_scale = std::sqrt(sensing_snr(cfg, r) / g);
    double se = 0;
    const int frames = 500;
    for (int i = 0; i < frames; ++i) {
      const FrameMatrix f = synthesize_frame(cfg, n_s, r, v, mix_seed(99, static_cast<std::uint64_t>(i)), noise_scale);
      const double e = engine.find_peak(f, cfg).range_est - r;
      se += e * e;
    }
    return Stat{std::sqrt(se / frames), range_crb_std(cfg, n_s, g)};
  };
  // 15 dB sits at the threshold region of the global argmax: a rare ambiguity
  // outlier dominates the RMSE there, so it is reported but not gated.
  const Stat edge = monte_carlo(15.0);
  const Stat gate = monte_carlo(20.0);
  const double bound = std::max(bin, 3 * gate.sigma_r);
  const bool pass = exact == total && gate.rmse <= bound && gate.rmse >= 0.5 * gate.sigma_r;
  return {pass, fmt("noiseless %.0f/%.0f exact bins; 20 dB RMSE %.3f m in [%.3f, %.3f] m", exact, total, gate.rmse,
                    0.5 * gate.sigma_r, bound) +
                    fmt("; 15 dB RMSE %.3f m (sigma_r %.3f m, not gated)", edge.rmse, edge.sigma_r)};
}

Outcome tradeoff_reproduction(const ScenarioConfig& s, const fs::path& out) {
  const auto rows = tradeoff_sweep(s, {5.0, 10.0, 20.0, 30.0});
  write_tradeoff_csv((out / "tradeoff.csv").string(), rows);
  bool monotone = true;
  const TradeoffRow *at250 = nullptr, *at262 = nullptr, *at50 = nullptr;
  const TradeoffRow* prev = nullptr;
  for (const auto& row : rows) {
    if (row.range_m != 20.0) continue;
    if (prev && (row.certainty_db < prev->certainty_db || row.rate_bps > prev->rate_bps)) monotone = false;
    prev = &row;
    if (row.n_s == 250) at250 = &row;
    if (row.n_c == 262) at262 = &row;
    if (row.n_s == 50) at50 = &row;
  }
  // Certainty in dB of 1/mm^2.
  const bool c250 = std::abs(at250->certainty_db_mm - 7.5) <= 3.0;
  const bool r262 = std::abs(at262->rate_bps / 600e6 - 1.0) <= 0.2;
  const bool r50 = std::abs(at50->rate_bps / 1100e6 - 1.0) <= 0.2;
  const bool c50 = std::abs(at50->certainty_db_mm - (-9.0)) <= 3.0;
  return {monotone && c250 && r262 && r50 && c50,
          fmt("monotone=%.0f; n_s=250: %.2f dB; n_c=262: %.0f Mbps; n_s=50: %.0f Mbps, %.2f dB", monotone,
              at250->certainty_db_mm, at262->rate_bps / 1e6, at50->rate_bps / 1e6, at50->certainty_db_mm)};
}

TrainResult train_logged(const ScenarioConfig& s, TrainConfig cfg, std::uint64_t seed, const fs::path& out,
                         const char* name) {
  IsacEnv env(s);
  cfg.reward = s.reward;
  const TrainResult r = train(env, cfg, seed);
  save_checkpoint((out / (std::string(name) + ".json")).string(), r.policy, cfg);
  return r;
}

Outcome allocation_behaviour(const ScenarioConfig& base, const fs::path& out, int episodes) {
  // The controller is trained with the accuracy term entering the reward with
  // a positive sign, so it asks for high accuracy and creates contention.
  ScenarioConfig s = base;
  s.reward.eta_cost_sign = 1;
  const TrainResult trained = train_logged(s, TrainConfig{}, 501, out, "policy_accuracy_seeking");
  const ExperimentResult r = run_experiment(s, as_policy_fn(trained.policy), episodes);
  write_cdf_rate_csv((out / "cdf_rate.csv").string(), r.modes);
  write_cdf_qi_csv((out / "cdf_qi.csv").string(), r.modes);
  write_summary_json((out / "summary.json").string(), s, r.modes);
  write_episodes_csv((out / "episodes.csv").string(), r.modes);
  for (const auto& m : r.modes) audit(m.episodes, s.ofdm.num_subcarriers);
  const ModeResult &cp = r.modes[0], &sp = r.modes[1], &eq = r.modes[2];
  const bool rate_order = cp.rate_met_fraction > sp.rate_met_fraction;
  const bool qi_order = sp.median_qis_to_goal <= cp.median_qis_to_goal;
  const bool eq_dominated = eq.rate_met_fraction < std::max(cp.rate_met_fraction, sp.rate_met_fraction) ||
                            eq.median_qis_to_goal > std::min(cp.median_qis_to_goal, sp.median_qis_to_goal);
  double eta = 0;
  for (const auto& e : cp.episodes) eta += e.summary.mean_eta;
  eta /= cp.episodes.size();
  return {rate_order && qi_order && eq_dominated,
          fmt("rate met CP %.3f / SP %.3f / Equal %.3f; median QIs CP %.1f / SP %.1f / Equal %.1f", cp.rate_met_fraction,
              sp.rate_met_fraction, eq.rate_met_fraction, cp.median_qis_to_goal, sp.median_qis_to_goal,
              eq.median_qis_to_goal) +
              fmt(" (mean eta %.0f)", eta)};
}

Outcome rl_solvability(const ScenarioConfig& base, const fs::path& out) {
  TrainConfig cfg;
  cfg.total_steps = 500000;

  ScenarioConfig perfect = base;
  perfect.sensing = SensingMode::Perfect;
  perfect.reward.kappa = 0.0;
  const TrainResult tp = train_logged(perfect, cfg, 601, out, "policy_perfect");
  const ModeResult mp = run_mode(perfect, as_policy_fn(tp.policy), 100);
  audit(mp.episodes, base.ofdm.num_subcarriers);

  ScenarioConfig noisy = base;  // CRB sensing, default sign
  const TrainResult tn = train_logged(noisy, cfg, 602, out, "policy_uncertainty");
  ScenarioConfig eval_scn = noisy;
  eval_scn.seed = noisy.seed + 1000;  // evaluation episodes unseen in training
  const ModeResult mn = run_mode(eval_scn, as_policy_fn(tn.policy), 100);
  audit(mn.episodes, base.ofdm.num_subcarriers);
  double eta = 0;
  for (const auto& e : mn.episodes) eta += e.summary.mean_eta;
  eta /= mn.episodes.size();

  const bool pass = mp.success_rate >= 0.9 && tp.env_steps <= 500000 && mn.success_rate >= 0.8 &&
                    tn.env_steps <= 500000 && eta < 1e5 / 2;
  return {pass, fmt("perfect: %.0f%% success after %.0f steps; uncertainty: %.0f%% success after %.0f steps, mean eta %.1f",
                    100 * mp.success_rate, tp.env_steps, 100 * mn.success_rate, tn.env_steps, eta)};
}

std::string fingerprint(const std::vector<EpisodeLog>& logs) {
  std::ostringstream o;
  const auto bits = [](double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    return u;
  };
  for (const auto& l : logs) {
    o << l.scenario_hash << ' ' << l.seed << '\n';
    for (const auto& r : l.records)
      o << r.t << ' ' << bits(r.true_state.x) << ' ' << bits(r.true_state.v) << ' ' << bits(r.belief.x_hat) << ' '
        << bits(r.belief.v_hat) << ' ' << bits(r.belief.x_var) << ' ' << bits(r.action.force) << ' '
        << bits(r.action.eta) << ' ' << r.allocation.n_s << ' ' << r.allocation.n_c << ' ' << bits(r.rate_bps) << ' '
        << bits(r.reward) << '\n';
  }
  return o.str();
}

Outcome invariants(const ScenarioConfig& base, const fs::path& out) {
  bool identical = true;
  const Checkpoint ck = load_checkpoint((out / "policy_uncertainty.json").string());
  for (AllocMode mode : {AllocMode::CommPriority, AllocMode::SensingPriority, AllocMode::Equal}) {
    ScenarioConfig s = base;
    s.allocator_mode = mode;
    const ModeResult a = run_mode(s, as_policy_fn(ck.policy), 10);
    const ModeResult b = run_mode(s, as_policy_fn(ck.policy), 10);
    audit(a.episodes, s.ofdm.num_subcarriers);
    audit(b.episodes, s.ofdm.num_subcarriers);
    identical = identical && fingerprint(a.episodes) == fingerprint(b.episodes);
  }
  {
    ScenarioConfig s = base;
    s.sensing = SensingMode::Signal;
    s.episode_cap = 5;
    const EpisodeLog a = run_episode(s, as_policy_fn(ck.policy), 0);
    const EpisodeLog b = run_episode(s, as_policy_fn(ck.policy), 0);
    audit({a, b}, s.ofdm.num_subcarriers);
    identical = identical && fingerprint({a}) == fingerprint({b});
  }
  return {identical && capacity_violations == 0 && qis_logged > 0,
          fmt("%.0f QIs audited, %.0f capacity violations; repeated runs bit-identical=%.0f", static_cast<double>(qis_logged),
              static_cast<double>(capacity_violations), identical)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string out_dir = "acceptance_out";
  int episodes = 100;
  app.add_option("--out", out_dir, "Directory for tables and checkpoints");
  app.add_option("--episodes", episodes, "Episodes per allocator mode")->check(CLI::Range(100, 100000));
  CLI11_PARSE(app, argc, argv);
  const fs::path out(out_dir);
  fs::create_directories(out);

  const ScenarioConfig scenario;
  const auto run = [&](int id, const char* name, double limit_s, auto&& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(id, name, o, seconds_since(t0), limit_s);
  };

  run(1, "position moments vs Monte Carlo", 30, [&] { return moments_vs_monte_carlo(); });
  run(2, "closed-form demands vs linear scan", 10, [&] { return demand_equivalence(scenario); });
  run(3, "periodogram fidelity", 300, [&] { return periodogram_fidelity(scenario); });
  run(4, "sensing/communication trade-off", 0, [&] { return tradeoff_reproduction(scenario, out); });
  run(5, "allocation priority trends", 0, [&] { return allocation_behaviour(scenario, out, episodes); });
  run(6, "controller solvability", 0, [&] { return rl_solvability(scenario, out); });
  run(7, "capacity and determinism invariants", 0, [&] { return invariants(scenario, out); });

  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
