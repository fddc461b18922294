#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "isacdt/sim.hpp"

namespace isacdt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& key, const std::string& text) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("scenario key '" + key + "': expected a number, got '" + text + "'");
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("scenario key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("scenario key '" + key + "': expected true or false, got '" + text + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const ScenarioConfig&)> get;  // empty string: omit
  std::function<void(ScenarioConfig&, const std::string&)> set;
};

#define REAL(name, member)                                                                  \
  Field {                                                                                  \
    name, [](const ScenarioConfig& s) { return format_double(s.member); },                 \
        [](ScenarioConfig& s, const std::string& v) { s.member = parse_double(name, v); } \
  }
#define INT(name, member)                                                                         \
  Field {                                                                                        \
    name, [](const ScenarioConfig& s) { return std::to_string(s.member); },                      \
        [](ScenarioConfig& s, const std::string& v) {                                            \
          s.member = static_cast<decltype(s.member)>(parse_int(name, v));                        \
        }                                                                                        \
  }
#define BOOL(name, member)                                                               \
  Field {                                                                               \
    name, [](const ScenarioConfig& s) { return std::string(s.member ? "true" : "false"); }, \
        [](ScenarioConfig& s, const std::string& v) { s.member = parse_bool(name, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      REAL("ofdm.carrier_hz", ofdm.carrier_hz),
      REAL("ofdm.subcarrier_spacing_hz", ofdm.subcarrier_spacing_hz),
      INT("ofdm.num_subcarriers", ofdm.num_subcarriers),
      INT("ofdm.num_symbols", ofdm.num_symbols),
      REAL("ofdm.symbol_duration_s", ofdm.symbol_duration_s),
      REAL("ofdm.tx_power_w", ofdm.tx_power_w),
      REAL("ofdm.tx_gain", ofdm.tx_gain),
      REAL("ofdm.rx_gain", ofdm.rx_gain),
      REAL("ofdm.noise_figure", ofdm.noise_figure),
      REAL("ofdm.noise_density_w_per_hz", ofdm.noise_density_w_per_hz),
      REAL("ofdm.rcs_m2", ofdm.rcs_m2),
      INT("ofdm.periodogram_subcarriers", ofdm.periodogram_subcarriers),
      INT("ofdm.periodogram_symbols", ofdm.periodogram_symbols),
      INT("ofdm.array_rows", ofdm.array_rows),
      INT("ofdm.array_cols", ofdm.array_cols),
      REAL("ofdm.row_spacing_wl", ofdm.row_spacing_wl),
      REAL("ofdm.col_spacing_wl", ofdm.col_spacing_wl),
      INT("pilots.pilot_length", pilots.pilot_length),
      INT("pilots.coherence_length", pilots.coherence_length),
      REAL("pilots.pilot_power_w", pilots.pilot_power_w),
      Field{"pilots.pilot_noise_w",
            [](const ScenarioConfig& s) { return s.pilots.pilot_noise_w ? format_double(*s.pilots.pilot_noise_w) : ""; },
            [](ScenarioConfig& s, const std::string& v) {
              if (v == "auto")
                s.pilots.pilot_noise_w.reset();
              else
                s.pilots.pilot_noise_w = parse_double("pilots.pilot_noise_w", v);
            }},
      BOOL("pilots.fading_scales_with_nc", pilots.fading_scales_with_nc),
      BOOL("calibrate_pilots", calibrate_pilots),
      INT("calibration_nc", calibration_nc),
      REAL("calibration_range_m", calibration_range_m),
      REAL("calibration_rate_bps", calibration_rate_bps),
      REAL("xi_m", xi_m),
      REAL("rate_target_bps", rate_target_bps),
      Field{"allocator_mode", [](const ScenarioConfig& s) { return to_string(s.allocator_mode); },
            [](ScenarioConfig& s, const std::string& v) { s.allocator_mode = parse_alloc_mode(v); }},
      REAL("geometry.ap_height_m", geometry.ap_height_m),
      REAL("geometry.track_offset_m", geometry.track_offset_m),
      REAL("geometry.track_length_m", geometry.track_length_m),
      BOOL("geometry.randomize_offset", geometry.randomize_offset),
      REAL("geometry.initial_range_min_m", geometry.initial_range_min_m),
      REAL("geometry.initial_range_max_m", geometry.initial_range_max_m),
      REAL("qi_duration_s", qi_duration_s),
      INT("episode_cap", episode_cap),
      Field{"seed", [](const ScenarioConfig& s) { return std::to_string(s.seed); },
            [](ScenarioConfig& s, const std::string& v) {
              std::uint64_t x = 0;
              const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
              if (res.ec != std::errc() || res.ptr != v.data() + v.size())
                throw std::invalid_argument("scenario key 'seed': expected an unsigned integer, got '" + v + "'");
              s.seed = x;
            }},
      Field{"sensing", [](const ScenarioConfig& s) { return to_string(s.sensing); },
            [](ScenarioConfig& s, const std::string& v) { s.sensing = parse_sensing_mode(v); }},
      REAL("dynamics.gravity", dynamics.gravity),
      REAL("dynamics.force_gain", dynamics.force_gain),
      REAL("dynamics.process_noise_x", dynamics.process_noise_cov[0]),
      REAL("dynamics.process_noise_xv", dynamics.process_noise_cov[1]),
      REAL("dynamics.process_noise_v", dynamics.process_noise_cov[3]),
      REAL("dynamics.goal_x", dynamics.goal_x),
      REAL("reward.kappa", reward.kappa),
      INT("reward.eta_cost_sign", reward.eta_cost_sign),
      Field{"initial_x", [](const ScenarioConfig& s) { return s.initial_x ? format_double(*s.initial_x) : ""; },
            [](ScenarioConfig& s, const std::string& v) {
              if (v == "random")
                s.initial_x.reset();
              else
                s.initial_x = parse_double("initial_x", v);
            }},
      REAL("p1.alpha1", p1.alpha1),
      REAL("p1.alpha2", p1.alpha2),
      REAL("p1.alpha3", p1.alpha3),
  };
  return table;
}

#undef REAL
#undef INT
#undef BOOL

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end())
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->set(s, value);
  }
  // The off-diagonal noise term is symmetric.
  s.dynamics.process_noise_cov[2] = s.dynamics.process_noise_cov[1];
  s.validate();
  return s;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const ScenarioConfig& s) {
  std::string out;
  for (const auto& f : fields()) {
    const std::string v = f.get(s);
    if (v.empty()) continue;
    out += f.key + " = " + v + "\n";
  }
  return out;
}

}  // namespace isacdt
