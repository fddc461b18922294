#include "isacdt/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "isacdt/uncertainty.hpp"

namespace isacdt {

PhysicalPose physical_map(const AgvState& s, const Geometry& g, double qi_duration_s) {
  PhysicalPose p;
  const double mpu = metres_per_unit(g);
  p.ground_m = g.track_offset_m + (s.x + 1.2) * mpu;
  p.range_m = std::hypot(p.ground_m, g.ap_height_m);
  p.theta_rad = std::atan2(g.ap_height_m, p.ground_m);
  const double ground_speed = mpu * s.v / qi_duration_s;
  p.radial_velocity_mps = p.range_m > 0.0 ? ground_speed * p.ground_m / p.range_m : 0.0;
  return p;
}

std::string to_string(SensingMode mode) {
  switch (mode) {
    case SensingMode::Crb: return "crb";
    case SensingMode::Signal: return "signal";
    case SensingMode::Perfect: return "perfect";
  }
  return "crb";
}

SensingMode parse_sensing_mode(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "crb") return SensingMode::Crb;
  if (t == "signal") return SensingMode::Signal;
  if (t == "perfect") return SensingMode::Perfect;
  throw std::invalid_argument("unknown sensing mode '" + t + "' (expected crb, signal or perfect)");
}

void ScenarioConfig::validate() const {
  ofdm.validate();
  pilots.validate();
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid scenario: ") + what);
  };
  require(xi_m > 0.0, "xi_m must be positive");
  require(rate_target_bps >= 0.0, "rate_target_bps must be non-negative");
  require(geometry.ap_height_m > 0.0, "ap_height_m must be positive");
  require(geometry.track_offset_m >= 0.0, "track_offset_m must be non-negative");
  require(geometry.track_length_m > 0.0, "track_length_m must be positive");
  require(geometry.initial_range_min_m > 0.0 && geometry.initial_range_max_m >= geometry.initial_range_min_m,
          "initial range interval is empty");
  require(qi_duration_s > 0.0, "qi_duration_s must be positive");
  require(episode_cap >= 1, "episode_cap must be at least 1");
  require(calibration_nc >= 1 && calibration_range_m > 0.0 && calibration_rate_bps > 0.0,
          "pilot calibration point must be positive");
  require(reward.eta_cost_sign == 1 || reward.eta_cost_sign == -1, "eta_cost_sign must be +1 or -1");
  require(reward.kappa >= 0.0, "kappa must be non-negative");
  if (initial_x) require(*initial_x >= dynamics.x_min && *initial_x <= dynamics.x_max, "initial_x outside track");
}

std::uint64_t ScenarioConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : format_scenario(*this)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

PilotConfig effective_pilots(const ScenarioConfig& s) {
  if (!s.calibrate_pilots) return s.pilots;
  return calibrate_pilot_power(s.ofdm, s.pilots, s.calibration_nc, s.calibration_range_m, s.calibration_rate_bps);
}

EpisodeSummary summarize(const std::vector<QiRecord>& records, int episode_cap, bool started_at_goal) {
  EpisodeSummary s;
  s.qis = static_cast<int>(records.size());
  s.success = started_at_goal || (!records.empty() && records.back().goal);
  s.qis_to_goal = s.success ? s.qis : episode_cap;
  if (records.empty()) return s;
  double met = 0.0;
  double xmet = 0.0;
  double rate = 0.0;
  double eta = 0.0;
  double p1 = 0.0;
  for (const auto& r : records) {
    met += r.rate_met ? 1.0 : 0.0;
    xmet += r.x_var_met ? 1.0 : 0.0;
    rate += r.rate_bps;
    eta += r.action.eta;
    s.total_reward += r.reward;
    p1 += r.p1;
  }
  const double n = static_cast<double>(records.size());
  s.rate_met_fraction = met / n;
  s.x_var_met_fraction = xmet / n;
  s.mean_rate_bps = rate / n;
  s.mean_eta = eta / n;
  s.mean_p1 = p1 / n;
  return s;
}

// ---------------------------------------------------------------------------

IsacEnv::IsacEnv(ScenarioConfig scenario) : IsacEnv(scenario, effective_pilots(scenario)) {}

IsacEnv::IsacEnv(ScenarioConfig scenario, PilotConfig pilots)
    : scenario_(std::move(scenario)), pilots_(pilots), geometry_(scenario_.geometry) {
  scenario_.validate();
  goal_energy_ = mechanical_energy({scenario_.dynamics.goal_x, 0.0}, scenario_.dynamics);
}

std::unique_ptr<Environment> IsacEnv::clone() const {
  return std::unique_ptr<Environment>(new IsacEnv(scenario_, pilots_));
}

double IsacEnv::shaping_potential(const BeliefState& b) const {
  const auto& k = scenario_.dynamics;
  const AgvState s{std::clamp(b.x_hat, k.x_min, k.x_max), std::clamp(b.v_hat, -k.v_max, k.v_max)};
  return mechanical_energy(s, k) / goal_energy_;
}

BeliefState IsacEnv::reset(std::uint64_t seed) {
  Rng start_rng(mix_seed(seed, 0));
  plant_rng_.seed(mix_seed(seed, 1));
  sensor_rng_.seed(mix_seed(seed, 2));
  frame_seed_ = mix_seed(seed, 3);
  frames_ = 0;

  const auto& k = scenario_.dynamics;
  std::uniform_real_distribution<double> x_dist(-0.6, -0.4);
  std::uniform_real_distribution<double> r_dist(geometry_.initial_range_min_m, geometry_.initial_range_max_m);
  const double x0 = scenario_.initial_x ? *scenario_.initial_x : x_dist(start_rng);
  const double r0 = r_dist(start_rng);
  state_ = {x0, 0.0};
  geometry_ = scenario_.geometry;
  if (geometry_.randomize_offset) {
    const double h = geometry_.ap_height_m;
    const double p0 = std::sqrt(std::max(r0 * r0 - h * h, 0.0));
    geometry_.track_offset_m = std::max(0.0, p0 - (x0 + 1.2) * metres_per_unit(geometry_));
  }
  initial_range_ = physical_map(state_, geometry_, scenario_.qi_duration_s).range_m;

  t_ = 0;
  done_ = state_.x >= k.goal_x;
  truncated_ = false;
  last_ = QiRecord{};
  belief_ = BeliefState{};
  // Initial acquisition with the whole band.
  belief_ = sense(state_, scenario_.ofdm.num_subcarriers).belief;
  return belief_;
}

IsacEnv::Sensed IsacEnv::sense(const AgvState& s, int n_s) {
  const auto& cfg = scenario_.ofdm;
  const PhysicalPose pose = physical_map(s, geometry_, scenario_.qi_duration_s);
  const double mpu = metres_per_unit(geometry_);
  const double to_task = scenario_.qi_duration_s / mpu;  // m/s -> task velocity
  const double h = geometry_.ap_height_m;

  Sensed out;
  RadarMeasurement& m = out.measurement;
  m.n_s_used = n_s;
  m.snr_linear = sensing_snr(cfg, pose.range_m);

  // Both normals are drawn every QI so the stream position does not depend on the branch.
  std::normal_distribution<double> n01(0.0, 1.0);
  const double z_pos = n01(sensor_rng_);
  const double z_vel = n01(sensor_rng_);
  const std::uint64_t frame_seed = mix_seed(frame_seed_, frames_++);

  if (scenario_.sensing == SensingMode::Perfect) {
    m.range_est = pose.range_m;
    m.velocity_est = pose.radial_velocity_mps;
    out.belief = {s.x, s.v, 0.0, 0.0};
    return out;
  }

  double sigma_r = 0.0;
  double sigma_theta = 0.0;
  try {
    sigma_r = range_crb_std(cfg, n_s, m.snr_linear);
    sigma_theta = elevation_crb_std(cfg, m.snr_linear, pose.theta_rad);
  } catch (const DegenerateCrbError&) {
    out.stale = true;
  } catch (const AngleSaturatedError&) {
    out.stale = true;
  }
  if (out.stale) {
    out.belief = belief_;
    out.belief.x_var += scenario_.dynamics.v_max * scenario_.dynamics.v_max;
    out.x_var_m2 = out.belief.x_var * mpu * mpu;
    return out;
  }
  const double sigma_v = velocity_crb_std(cfg, m.snr_linear);
  m.sigma_r = sigma_r;
  m.sigma_theta = sigma_theta;
  m.sigma_v = sigma_v;

  const PositionBelief pm = position_moments({pose.range_m, sigma_r * sigma_r, pose.theta_rad, sigma_theta * sigma_theta});
  double p_hat = 0.0;
  double x_var_m2 = pm.x_var;
  double v_var_radial = sigma_v * sigma_v;
  if (scenario_.sensing == SensingMode::Crb) {
    p_hat = pm.x_mean + std::sqrt(pm.x_var) * z_pos;
    m.range_est = std::hypot(p_hat, h);
    m.velocity_est = pose.radial_velocity_mps + sigma_v * z_vel;
  } else {
    const FrameMatrix frame =
        synthesize_frame(cfg, n_s, pose.range_m, pose.radial_velocity_mps, frame_seed);
    const PeriodogramPeak peak = periodogram_peak_estimate(frame, cfg);
    const double theta_hat = pose.theta_rad + sigma_theta * z_pos;
    p_hat = peak.range_est * std::cos(theta_hat);
    m.range_est = peak.range_est;
    m.velocity_est = peak.velocity_est;
    const double range_bin = kSpeedOfLight / (2.0 * cfg.subcarrier_spacing_hz * cfg.periodogram_subcarriers);
    const double velocity_bin =
        kSpeedOfLight / (2.0 * cfg.carrier_hz * cfg.symbol_duration_s * cfg.periodogram_symbols);
    const double c = std::cos(pose.theta_rad);
    x_var_m2 += range_bin * range_bin * c * c / 12.0;
    v_var_radial += velocity_bin * velocity_bin / 12.0;
  }

  const double cos_hat = std::max(p_hat / std::hypot(p_hat, h), 1e-3);
  out.belief.x_hat = (p_hat - geometry_.track_offset_m) / mpu - 1.2;
  out.belief.v_hat = m.velocity_est / cos_hat * to_task;
  out.belief.x_var = x_var_m2 / (mpu * mpu);
  out.belief.v_var = v_var_radial / (cos_hat * cos_hat) * to_task * to_task;
  out.x_var_m2 = x_var_m2;
  return out;
}

EnvStep IsacEnv::step(const AgentAction& action) {
  if (terminal()) throw std::logic_error("step() called on a finished episode");
  const auto& cfg = scenario_.ofdm;
  const auto& k = scenario_.dynamics;
  const int total = cfg.num_subcarriers;

  QiRecord rec;
  rec.t = t_;
  rec.true_state = state_;
  rec.action = action;

  // Demands from the believed geometry.
  const double mpu = metres_per_unit(geometry_);
  const double h = geometry_.ap_height_m;
  const double p_hat = std::max(geometry_.track_offset_m + (belief_.x_hat + 1.2) * mpu, 0.0);
  const double r_hat = std::max(std::hypot(p_hat, h), 1e-3);
  const double theta_hat = std::atan2(h, p_hat);
  const AccuracyTarget target = AccuracyTarget::make(scenario_.xi_m, std::max(action.eta, 1e-12));
  rec.xibar_sq = target.xibar_sq;

  const double gamma_hat = sensing_snr(cfg, r_hat);
  int demand_s = total + 1;
  try {
    const double st = elevation_crb_std(cfg, gamma_hat, theta_hat);
    const SensingDemand sd = required_sensing_subcarriers(target, {r_hat, 0.0, theta_hat, st * st}, gamma_hat, cfg);
    demand_s = std::min(sd.count, total + 1);
  } catch (const AngleSaturatedError&) {
  }
  const CommDemand cd = required_comm_subcarriers(cfg, pilots_, scenario_.rate_target_bps, r_hat);
  const int demand_c = std::min(cd.count, total + 1);
  rec.allocation = allocate(total, demand_c, demand_s, scenario_.allocator_mode);

  const Sensed sensed = sense(state_, rec.allocation.n_s);
  rec.measurement = sensed.measurement;
  rec.belief = sensed.belief;
  rec.stale = sensed.stale;
  rec.x_var_m2 = sensed.x_var_m2;
  rec.x_var_met = !sensed.stale && sensed.x_var_m2 <= target.xibar_sq;

  const PhysicalPose pose = physical_map(state_, geometry_, scenario_.qi_duration_s);
  rec.range_m = pose.range_m;
  rec.rate_bps = link_stats(cfg, pilots_, rec.allocation.n_c, pose.range_m).rate_bps;
  rec.rate_met = rec.rate_bps >= scenario_.rate_target_bps;

  const auto noise = sample_process_noise(k, plant_rng_);
  const AgvState next = isacdt::step(state_, action.force, noise, k);
  const StepOutcome outcome = goal_reward(state_, action.force, next, k);
  rec.base_reward = outcome.reward;
  rec.reward = augmented_reward(outcome.reward, action.eta, scenario_.reward);
  rec.goal = outcome.done;
  rec.p1 = p1_objective(scenario_.p1, sensed.x_var_m2, target.xibar_sq, rec.allocation.n_s, rec.allocation.n_c,
                        rec.rate_bps, scenario_.rate_target_bps);

  belief_ = sensed.belief;
  state_ = next;
  ++t_;
  done_ = outcome.done;
  truncated_ = !done_ && t_ >= scenario_.episode_cap;
  last_ = rec;

  EnvStep st;
  st.obs = belief_;
  st.reward = rec.reward;
  st.base_reward = rec.base_reward;
  st.done = done_;
  st.truncated = truncated_;
  return st;
}

// ---------------------------------------------------------------------------

std::uint64_t episode_seed(const ScenarioConfig& scenario, int index) {
  return mix_seed(scenario.seed, static_cast<std::uint64_t>(index));
}

namespace {

EpisodeLog run_in(IsacEnv& env, const PolicyFn& policy, int episode_index) {
  const auto& s = env.scenario();
  EpisodeLog log;
  log.scenario_hash = s.hash();
  log.seed = episode_seed(s, episode_index);
  log.episode_index = episode_index;
  BeliefState obs = env.reset(log.seed);
  log.initial_range_m = env.initial_range();
  const bool at_goal = env.terminal();
  while (!env.terminal()) {
    obs = env.step(policy(obs)).obs;
    log.records.push_back(env.last_record());
  }
  log.summary = summarize(log.records, s.episode_cap, at_goal);
  return log;
}

}  // namespace

EpisodeLog run_episode(const ScenarioConfig& scenario, const PolicyFn& policy, int episode_index) {
  IsacEnv env(scenario);
  return run_in(env, policy, episode_index);
}

PolicyFn energy_pump_policy(double eta) {
  return [eta](const BeliefState& b) {
    AgentAction a;
    a.force = b.v_hat >= 0.0 ? 1.0 : -1.0;
    a.eta = eta;
    return a;
  };
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> samples) {
  std::vector<CdfPoint> out;
  if (samples.empty()) return out;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.push_back({samples[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<TradeoffRow> tradeoff_sweep(const ScenarioConfig& scenario, const std::vector<double>& ranges_m) {
  const auto& cfg = scenario.ofdm;
  const PilotConfig pilots = effective_pilots(scenario);
  const double h = scenario.geometry.ap_height_m;
  const int total = cfg.num_subcarriers;
  std::vector<TradeoffRow> rows;
  for (double r : ranges_m) {
    const double p = std::sqrt(std::max(r * r - h * h, 0.0));
    const double theta = std::atan2(h, p);
    const double gamma = sensing_snr(cfg, r);
    const double st = elevation_crb_std(cfg, gamma, theta);
    for (int n_s = 1; n_s < total; ++n_s) {
      TradeoffRow row;
      row.range_m = r;
      row.n_s = n_s;
      row.n_c = total - n_s;
      if (n_s < 2) {
        row.x_var_m2 = std::numeric_limits<double>::infinity();
      } else {
        const double sr = range_crb_std(cfg, n_s, gamma);
        row.x_var_m2 = position_moments({r, sr * sr, theta, st * st}).x_var;
      }
      row.certainty_db = -10.0 * std::log10(row.x_var_m2);
      row.certainty_db_mm = -10.0 * std::log10(row.x_var_m2 * 1e6);
      row.rate_bps = link_stats(cfg, pilots, row.n_c, r).rate_bps;
      rows.push_back(row);
    }
  }
  return rows;
}

ModeResult run_mode(const ScenarioConfig& scenario, const PolicyFn& policy, int episodes) {
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  ScenarioConfig s = scenario;
  ModeResult res;
  res.mode = s.allocator_mode;
  IsacEnv env(s);
  std::vector<double> rates;
  std::vector<double> qis;
  double met = 0.0;
  double successes = 0.0;
  for (int i = 0; i < episodes; ++i) {
    res.episodes.push_back(run_in(env, policy, i));
    const EpisodeLog& log = res.episodes.back();
    for (const auto& r : log.records) {
      rates.push_back(r.rate_bps);
      met += r.rate_met ? 1.0 : 0.0;
    }
    qis.push_back(log.summary.qis_to_goal);
    successes += log.summary.success ? 1.0 : 0.0;
  }
  res.rate_met_fraction = rates.empty() ? 0.0 : met / static_cast<double>(rates.size());
  res.median_qis_to_goal = median(qis);
  res.success_rate = successes / episodes;
  res.rate_cdf = empirical_cdf(std::move(rates));
  res.qi_cdf = empirical_cdf(std::move(qis));
  return res;
}

ExperimentResult run_experiment(const ScenarioConfig& scenario, const PolicyFn& policy, int episodes,
                                const std::vector<AllocMode>& modes, const std::vector<double>& sweep_ranges_m) {
  ExperimentResult out;
  for (AllocMode m : modes) {
    ScenarioConfig s = scenario;
    s.allocator_mode = m;
    out.modes.push_back(run_mode(s, policy, episodes));
  }
  out.tradeoff = tradeoff_sweep(scenario, sweep_ranges_m);
  return out;
}

}  // namespace isacdt
