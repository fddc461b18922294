#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isacdt/agent.hpp"
#include "isacdt/allocator.hpp"
#include "isacdt/comms.hpp"
#include "isacdt/config.hpp"
#include "isacdt/dynamics.hpp"
#include "isacdt/sensing.hpp"

namespace isacdt {

/// Access point above a straight track. The car's task coordinate
/// x in [-1.2, 0.6] maps linearly onto [offset, offset + track_length].
struct Geometry {
  double ap_height_m = 2.5;
  double track_offset_m = 10.0;
  double track_length_m = 8.0;
  // When set, each episode redraws the offset so the initial range is
  // uniform on [initial_range_min_m, initial_range_max_m].
  bool randomize_offset = true;
  double initial_range_min_m = 5.0;
  double initial_range_max_m = 30.0;
};

struct PhysicalPose {
  double ground_m = 0.0;  // p
  double range_m = 0.0;
  double theta_rad = 0.0;  // elevation seen from the AP
  double radial_velocity_mps = 0.0;
};

PhysicalPose physical_map(const AgvState& state, const Geometry& g, double qi_duration_s);

/// Task-coordinate scale: metres per unit of x.
inline double metres_per_unit(const Geometry& g) { return g.track_length_m / 1.8; }

enum class SensingMode { Crb, Signal, Perfect };
std::string to_string(SensingMode mode);
SensingMode parse_sensing_mode(std::string_view text);

struct ScenarioConfig {
  OfdmConfig ofdm;
  PilotConfig pilots;
  // Tune the pilot power so that rate(calibration_nc, calibration_range) hits
  // calibration_rate before anything else runs.
  bool calibrate_pilots = true;
  int calibration_nc = 262;
  double calibration_range_m = 20.0;
  double calibration_rate_bps = 600e6;
  double xi_m = 0.02;
  double rate_target_bps = 1e9;
  AllocMode allocator_mode = AllocMode::CommPriority;
  Geometry geometry;
  double qi_duration_s = 0.05;
  int episode_cap = 999;
  std::uint64_t seed = 1;
  SensingMode sensing = SensingMode::Crb;
  DynamicsConstants dynamics;
  RewardWeights reward;
  std::optional<double> initial_x;  // fixed start instead of U[-0.6, -0.4]
  P1Weights p1;

  void validate() const;
  /// FNV-1a over the canonical key=value text of every field.
  std::uint64_t hash() const;
};

/// Pilot settings after the optional calibration step.
PilotConfig effective_pilots(const ScenarioConfig& s);

struct QiRecord {
  int t = 0;
  AgvState true_state;  // state seen by this QI's sensing
  BeliefState belief;   // after this QI's measurement update
  AgentAction action;
  AllocationDecision allocation;
  RadarMeasurement measurement;
  double range_m = 0.0;       // true range at sensing time
  double xibar_sq = 0.0;      // m^2
  double x_var_m2 = 0.0;      // posterior position variance in m^2
  bool stale = false;         // no usable measurement this QI
  double rate_bps = 0.0;
  bool rate_met = false;
  bool x_var_met = false;
  double reward = 0.0;       // augmented
  double base_reward = 0.0;  // task reward alone
  double p1 = 0.0;
  bool goal = false;  // the plant step of this QI reached the goal
};

struct EpisodeSummary {
  bool success = false;
  int qis = 0;
  int qis_to_goal = 0;  // == episode_cap on failure
  double rate_met_fraction = 0.0;
  double x_var_met_fraction = 0.0;
  double mean_rate_bps = 0.0;
  double mean_eta = 0.0;
  double total_reward = 0.0;
  double mean_p1 = 0.0;
};

struct EpisodeLog {
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  int episode_index = 0;
  double initial_range_m = 0.0;
  std::vector<QiRecord> records;
  EpisodeSummary summary;
};

EpisodeSummary summarize(const std::vector<QiRecord>& records, int episode_cap, bool started_at_goal = false);

/// The sense/decide/allocate/communicate loop as an RL environment.
class IsacEnv : public Environment {
 public:
  explicit IsacEnv(ScenarioConfig scenario);

  BeliefState reset(std::uint64_t episode_seed) override;
  EnvStep step(const AgentAction& action) override;
  bool terminal() const override { return done_ || truncated_; }
  /// Mechanical energy of the believed state relative to the goal height.
  double shaping_potential(const BeliefState& b) const override;
  std::unique_ptr<Environment> clone() const override;

  const ScenarioConfig& scenario() const { return scenario_; }
  const PilotConfig& pilots() const { return pilots_; }
  const AgvState& state() const { return state_; }
  const BeliefState& belief() const { return belief_; }
  const QiRecord& last_record() const { return last_; }
  int qi() const { return t_; }
  double track_offset() const { return geometry_.track_offset_m; }
  double initial_range() const { return initial_range_; }

 private:
  IsacEnv(ScenarioConfig scenario, PilotConfig pilots);

  struct Sensed {
    BeliefState belief;
    RadarMeasurement measurement;
    double x_var_m2 = 0.0;
    bool stale = false;
  };
  Sensed sense(const AgvState& s, int n_s);

  ScenarioConfig scenario_;
  PilotConfig pilots_;
  Geometry geometry_;
  AgvState state_;
  BeliefState belief_;
  QiRecord last_;
  Rng plant_rng_;
  Rng sensor_rng_;
  std::uint64_t frame_seed_ = 0;
  std::uint64_t frames_ = 0;
  int t_ = 0;
  bool done_ = false;
  bool truncated_ = false;
  double initial_range_ = 0.0;
  double goal_energy_ = 1.0;
};

/// Seed of episode `index` under `scenario.seed`.
std::uint64_t episode_seed(const ScenarioConfig& scenario, int index);

EpisodeLog run_episode(const ScenarioConfig& scenario, const PolicyFn& policy, int episode_index = 0);

/// Pumps energy by pushing along the believed velocity and requests a fixed
/// accuracy.
PolicyFn energy_pump_policy(double eta);

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};
/// Empirical CDF: one point per distinct value, non-decreasing, ending at 1.
std::vector<CdfPoint> empirical_cdf(std::vector<double> samples);

struct TradeoffRow {
  double range_m = 0.0;
  int n_s = 0;
  int n_c = 0;
  double x_var_m2 = 0.0;     // +inf when the range CRB is undefined (n_s = 1)
  double certainty_db = 0.0;     // 10 log10(1 / x_var) with x_var in m^2
  double certainty_db_mm = 0.0;  // same with x_var in mm^2
  double rate_bps = 0.0;
};

/// For each range, every split n_s = 1..N-1 with n_c = N - n_s.
std::vector<TradeoffRow> tradeoff_sweep(const ScenarioConfig& scenario, const std::vector<double>& ranges_m);

struct ModeResult {
  AllocMode mode = AllocMode::CommPriority;
  std::vector<EpisodeLog> episodes;
  std::vector<CdfPoint> rate_cdf;  // per-QI rates
  std::vector<CdfPoint> qi_cdf;    // per-episode QIs to goal
  double rate_met_fraction = 0.0;  // pooled over all QIs
  double median_qis_to_goal = 0.0;
  double success_rate = 0.0;
};

struct ExperimentResult {
  std::vector<ModeResult> modes;
  std::vector<TradeoffRow> tradeoff;
};

ModeResult run_mode(const ScenarioConfig& scenario, const PolicyFn& policy, int episodes);
ExperimentResult run_experiment(const ScenarioConfig& scenario, const PolicyFn& policy, int episodes,
                                const std::vector<AllocMode>& modes = {AllocMode::CommPriority,
                                                                       AllocMode::SensingPriority,
                                                                       AllocMode::Equal},
                                const std::vector<double>& sweep_ranges_m = {5.0, 10.0, 20.0, 30.0});

double median(std::vector<double> values);

// Scenario files: flat `key = value` lines, `#` comments. Unknown keys throw.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
std::string format_scenario(const ScenarioConfig& s);

// Output files.
void write_episodes_csv(const std::string& path, const std::vector<ModeResult>& modes);
void write_summary_json(const std::string& path, const ScenarioConfig& s, const std::vector<ModeResult>& modes);
void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffRow>& rows);
void write_cdf_rate_csv(const std::string& path, const std::vector<ModeResult>& modes);
void write_cdf_qi_csv(const std::string& path, const std::vector<ModeResult>& modes);
/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace isacdt
