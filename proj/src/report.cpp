#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "isacdt/sim.hpp"
#include "json.hpp"

namespace isacdt {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string sci(double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

std::string rate_text(double bps) { return std::to_string(std::llround(bps)); }

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

void write_episodes_csv(const std::string& path, const std::vector<ModeResult>& modes) {
  auto out = open_out(path);
  out << "mode,episode,t,x,v,range_m,x_hat,v_hat,x_var,v_var,force,eta,demand_s,demand_c,n_s,n_c,stale,"
         "sigma_r,sigma_theta,sigma_v,snr_db,x_var_m2,xibar_sq,x_var_met,rate_bps,rate_met,reward,base_reward,"
         "p1,goal\n";
  for (const auto& m : modes) {
    const std::string mode = to_string(m.mode);
    for (const auto& ep : m.episodes) {
      for (const auto& r : ep.records) {
        out << mode << ',' << ep.episode_index << ',' << r.t << ',' << format_double(r.true_state.x) << ','
            << format_double(r.true_state.v) << ',' << format_double(r.range_m) << ','
            << format_double(r.belief.x_hat) << ',' << format_double(r.belief.v_hat) << ',' << sci(r.belief.x_var)
            << ',' << sci(r.belief.v_var) << ',' << format_double(r.action.force) << ','
            << format_double(r.action.eta) << ',' << r.allocation.demand_s << ',' << r.allocation.demand_c << ','
            << r.allocation.n_s << ',' << r.allocation.n_c << ',' << flag(r.stale) << ','
            << format_double(r.measurement.sigma_r) << ',' << format_double(r.measurement.sigma_theta) << ','
            << format_double(r.measurement.sigma_v) << ',' << format_double(linear_to_db(r.measurement.snr_linear))
            << ',' << sci(r.x_var_m2) << ',' << sci(r.xibar_sq) << ',' << flag(r.x_var_met) << ','
            << rate_text(r.rate_bps) << ',' << flag(r.rate_met) << ',' << format_double(r.reward) << ','
            << format_double(r.base_reward) << ',' << format_double(r.p1) << ',' << flag(r.goal) << '\n';
      }
    }
  }
}

void write_summary_json(const std::string& path, const ScenarioConfig& s, const std::vector<ModeResult>& modes) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario_hash"] = s.hash();
  j["seed"] = s.seed;
  j["scenario"] = format_scenario(s);
  j["pilot_power_w"] = effective_pilots(s).pilot_power_w;
  ordered_json arr = ordered_json::array();
  for (const auto& m : modes) {
    ordered_json jm;
    jm["mode"] = to_string(m.mode);
    jm["episodes"] = m.episodes.size();
    jm["success_rate"] = m.success_rate;
    jm["rate_met_fraction"] = m.rate_met_fraction;
    jm["median_qis_to_goal"] = m.median_qis_to_goal;
    double mean_qis = 0.0;
    ordered_json eps = ordered_json::array();
    for (const auto& e : m.episodes) {
      mean_qis += e.summary.qis_to_goal;
      eps.push_back({{"episode", e.episode_index},
                     {"seed", e.seed},
                     {"initial_range_m", e.initial_range_m},
                     {"success", e.summary.success},
                     {"qis", e.summary.qis},
                     {"qis_to_goal", e.summary.qis_to_goal},
                     {"rate_met_fraction", e.summary.rate_met_fraction},
                     {"x_var_met_fraction", e.summary.x_var_met_fraction},
                     {"mean_rate_bps", std::llround(e.summary.mean_rate_bps)},
                     {"mean_eta", e.summary.mean_eta},
                     {"total_reward", e.summary.total_reward},
                     {"mean_p1", e.summary.mean_p1}});
    }
    jm["mean_qis_to_goal"] = m.episodes.empty() ? 0.0 : mean_qis / static_cast<double>(m.episodes.size());
    jm["per_episode"] = eps;
    arr.push_back(jm);
  }
  j["modes"] = arr;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffRow>& rows) {
  auto out = open_out(path);
  out << "range_m,n_s,n_c,x_var_m2,certainty_db,certainty_db_mm,rate_bps\n";
  for (const auto& r : rows) {
    out << format_double(r.range_m) << ',' << r.n_s << ',' << r.n_c << ',' << sci(r.x_var_m2) << ','
        << format_double(r.certainty_db) << ',' << format_double(r.certainty_db_mm) << ',' << rate_text(r.rate_bps)
        << '\n';
  }
}

void write_cdf_rate_csv(const std::string& path, const std::vector<ModeResult>& modes) {
  auto out = open_out(path);
  out << "mode,rate_bps,fraction\n";
  for (const auto& m : modes)
    for (const auto& p : m.rate_cdf)
      out << to_string(m.mode) << ',' << rate_text(p.value) << ',' << format_double(p.fraction) << '\n';
}

void write_cdf_qi_csv(const std::string& path, const std::vector<ModeResult>& modes) {
  auto out = open_out(path);
  out << "mode,qis_to_goal,fraction\n";
  for (const auto& m : modes)
    for (const auto& p : m.qi_cdf)
      out << to_string(m.mode) << ',' << std::llround(p.value) << ',' << format_double(p.fraction) << '\n';
}

}  // namespace isacdt
