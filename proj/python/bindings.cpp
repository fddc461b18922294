#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isacdt/agent.hpp"
#include "isacdt/allocator.hpp"
#include "isacdt/comms.hpp"
#include "isacdt/dynamics.hpp"
#include "isacdt/sensing.hpp"
#include "isacdt/sim.hpp"
#include "isacdt/uncertainty.hpp"

namespace py = pybind11;
using namespace isacdt;

namespace {

py::array_t<std::complex<double>> frame_array(const FrameMatrix& f) {
  py::array_t<std::complex<double>> a({f.rows, f.cols});
  std::copy(f.data.begin(), f.data.end(), a.mutable_data());
  return a;
}

FrameMatrix frame_from(py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw std::invalid_argument("frame must be a 2-D array (subcarriers x symbols)");
  FrameMatrix f;
  f.rows = static_cast<int>(a.shape(0));
  f.cols = static_cast<int>(a.shape(1));
  f.data.assign(a.data(), a.data() + a.size());
  return f;
}

py::dict record_dict(const QiRecord& r) {
  py::dict d;
  d["t"] = r.t;
  d["x"] = r.true_state.x;
  d["v"] = r.true_state.v;
  d["x_hat"] = r.belief.x_hat;
  d["v_hat"] = r.belief.v_hat;
  d["x_var"] = r.belief.x_var;
  d["force"] = r.action.force;
  d["eta"] = r.action.eta;
  d["demand_s"] = r.allocation.demand_s;
  d["demand_c"] = r.allocation.demand_c;
  d["n_s"] = r.allocation.n_s;
  d["n_c"] = r.allocation.n_c;
  d["range_m"] = r.range_m;
  d["x_var_m2"] = r.x_var_m2;
  d["rate_bps"] = r.rate_bps;
  d["rate_met"] = r.rate_met;
  d["x_var_met"] = r.x_var_met;
  d["reward"] = r.reward;
  d["goal"] = r.goal;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ISAC digital-twin AGV simulator";

  py::class_<OfdmConfig>(m, "OfdmConfig")
      .def(py::init<>())
      .def_readwrite("carrier_hz", &OfdmConfig::carrier_hz)
      .def_readwrite("subcarrier_spacing_hz", &OfdmConfig::subcarrier_spacing_hz)
      .def_readwrite("num_subcarriers", &OfdmConfig::num_subcarriers)
      .def_readwrite("num_symbols", &OfdmConfig::num_symbols)
      .def_readwrite("symbol_duration_s", &OfdmConfig::symbol_duration_s)
      .def_readwrite("tx_power_w", &OfdmConfig::tx_power_w)
      .def_readwrite("tx_gain", &OfdmConfig::tx_gain)
      .def_readwrite("rx_gain", &OfdmConfig::rx_gain)
      .def_readwrite("noise_figure", &OfdmConfig::noise_figure)
      .def_readwrite("noise_density_w_per_hz", &OfdmConfig::noise_density_w_per_hz)
      .def_readwrite("rcs_m2", &OfdmConfig::rcs_m2)
      .def_readwrite("periodogram_subcarriers", &OfdmConfig::periodogram_subcarriers)
      .def_readwrite("periodogram_symbols", &OfdmConfig::periodogram_symbols)
      .def_readwrite("array_rows", &OfdmConfig::array_rows)
      .def_readwrite("array_cols", &OfdmConfig::array_cols)
      .def("validate", &OfdmConfig::validate);

  py::class_<PilotConfig>(m, "PilotConfig")
      .def(py::init<>())
      .def_readwrite("pilot_length", &PilotConfig::pilot_length)
      .def_readwrite("coherence_length", &PilotConfig::coherence_length)
      .def_readwrite("pilot_power_w", &PilotConfig::pilot_power_w)
      .def_readwrite("pilot_noise_w", &PilotConfig::pilot_noise_w)
      .def_readwrite("fading_scales_with_nc", &PilotConfig::fading_scales_with_nc);

  // dynamics
  py::class_<AgvState>(m, "AgvState")
      .def(py::init<double, double>(), py::arg("x") = -0.5, py::arg("v") = 0.0)
      .def_readwrite("x", &AgvState::x)
      .def_readwrite("v", &AgvState::v)
      .def("__repr__", [](const AgvState& s) {
        return "AgvState(x=" + format_double(s.x) + ", v=" + format_double(s.v) + ")";
      });
  m.def(
      "step", [](const AgvState& s, double force, std::array<double, 2> noise) { return step(s, force, noise); },
      py::arg("state"), py::arg("force"), py::arg("noise") = std::array<double, 2>{0.0, 0.0});
  m.def(
      "goal_reward",
      [](const AgvState& prev, double force, const AgvState& next) {
        const StepOutcome o = goal_reward(prev, force, next);
        return py::make_tuple(o.reward, o.done);
      },
      py::arg("prev"), py::arg("force"), py::arg("next"));

  // sensing
  py::class_<CrbBundle>(m, "CrbBundle")
      .def_readonly("sigma_r", &CrbBundle::sigma_r)
      .def_readonly("sigma_v", &CrbBundle::sigma_v)
      .def_readonly("sigma_theta", &CrbBundle::sigma_theta)
      .def_readonly("sigma_fx", &CrbBundle::sigma_fx);
  m.def("received_power", &received_power, py::arg("cfg"), py::arg("range_m"));
  m.def("sensing_snr", &sensing_snr, py::arg("cfg"), py::arg("range_m"));
  m.def("range_crb_std", &range_crb_std, py::arg("cfg"), py::arg("n_s"), py::arg("gamma_s"));
  m.def("velocity_crb_std", &velocity_crb_std, py::arg("cfg"), py::arg("gamma_s"));
  m.def("elevation_crb_std", &elevation_crb_std, py::arg("cfg"), py::arg("gamma_s"), py::arg("theta_mean"),
        py::arg("phi_azimuth") = 0.0);
  m.def("crb_bundle", &crb_bundle, py::arg("cfg"), py::arg("n_s"), py::arg("gamma_s"), py::arg("theta_mean"),
        py::arg("phi_azimuth") = 0.0);
  m.def(
      "synthesize_frame",
      [](const OfdmConfig& cfg, int n_s, double range_m, double velocity_mps, std::uint64_t seed, double noise_scale) {
        return frame_array(synthesize_frame(cfg, n_s, range_m, velocity_mps, seed, noise_scale));
      },
      py::arg("cfg"), py::arg("n_s"), py::arg("range_m"), py::arg("velocity_mps"), py::arg("seed"),
      py::arg("noise_scale") = 1.0);
  m.def(
      "periodogram_peak_estimate",
      [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> frame, const OfdmConfig& cfg) {
        const PeriodogramPeak p = periodogram_peak_estimate(frame_from(frame), cfg);
        py::dict d;
        d["range_est"] = p.range_est;
        d["velocity_est"] = p.velocity_est;
        d["range_bin"] = p.range_bin;
        d["doppler_bin"] = p.doppler_bin;
        d["peak_power"] = p.peak_power;
        return d;
      },
      py::arg("frame"), py::arg("cfg"));

  // comms
  py::class_<LinkStats>(m, "LinkStats")
      .def_readonly("beta", &LinkStats::beta)
      .def_readonly("sigma_hhat_sq", &LinkStats::sigma_hhat_sq)
      .def_readonly("eps_sq", &LinkStats::eps_sq)
      .def_readonly("noise_w", &LinkStats::noise_w)
      .def_readonly("gamma_c", &LinkStats::gamma_c)
      .def_readonly("rate_bps", &LinkStats::rate_bps);
  py::class_<CommDemand>(m, "CommDemand")
      .def_readonly("count", &CommDemand::count)
      .def_readonly("overflow", &CommDemand::overflow)
      .def_readonly("gamma_c", &CommDemand::gamma_c)
      .def_readonly("iterations", &CommDemand::iterations);
  m.def("link_stats", &link_stats, py::arg("cfg"), py::arg("pilots"), py::arg("n_c"), py::arg("range_m"));
  m.def("required_comm_subcarriers", &required_comm_subcarriers, py::arg("cfg"), py::arg("pilots"),
        py::arg("rate_target_bps"), py::arg("range_m"));
  m.def("calibrate_pilot_power", &calibrate_pilot_power, py::arg("cfg"), py::arg("pilots"), py::arg("n_c"),
        py::arg("range_m"), py::arg("rate_target_bps"));

  // uncertainty
  py::class_<PolarBelief>(m, "PolarBelief")
      .def(py::init([](double r_mean, double r_var, double theta_mean, double theta_var) {
             return PolarBelief{r_mean, r_var, theta_mean, theta_var};
           }),
           py::arg("r_mean"), py::arg("r_var"), py::arg("theta_mean"), py::arg("theta_var"))
      .def_readwrite("r_mean", &PolarBelief::r_mean)
      .def_readwrite("r_var", &PolarBelief::r_var)
      .def_readwrite("theta_mean", &PolarBelief::theta_mean)
      .def_readwrite("theta_var", &PolarBelief::theta_var);
  py::class_<PositionBelief>(m, "PositionBelief")
      .def_readonly("x_mean", &PositionBelief::x_mean)
      .def_readonly("x_var", &PositionBelief::x_var)
      .def_readonly("gamma_term", &PositionBelief::gamma_term)
      .def_readonly("upsilon_term", &PositionBelief::upsilon_term);
  m.def("position_moments", &position_moments, py::arg("belief"));
  m.def(
      "required_sensing_subcarriers",
      [](double xi_m, double eta, const PolarBelief& b, double gamma_s, const OfdmConfig& cfg) {
        const SensingDemand d = required_sensing_subcarriers(AccuracyTarget::make(xi_m, eta), b, gamma_s, cfg);
        return py::make_tuple(d.count, d.feasible);
      },
      py::arg("xi_m"), py::arg("eta"), py::arg("belief"), py::arg("gamma_s"), py::arg("cfg"));

  // allocator
  py::enum_<AllocMode>(m, "AllocMode")
      .value("CP", AllocMode::CommPriority)
      .value("SP", AllocMode::SensingPriority)
      .value("EQUAL", AllocMode::Equal);
  py::class_<AllocationDecision>(m, "AllocationDecision")
      .def_readonly("n_s", &AllocationDecision::n_s)
      .def_readonly("n_c", &AllocationDecision::n_c)
      .def_readonly("demand_s", &AllocationDecision::demand_s)
      .def_readonly("demand_c", &AllocationDecision::demand_c)
      .def_readonly("feasible_s", &AllocationDecision::feasible_s)
      .def_readonly("feasible_c", &AllocationDecision::feasible_c);
  m.def("allocate", &allocate, py::arg("total"), py::arg("demand_c"), py::arg("demand_s"), py::arg("mode"));

  // agent
  m.def(
      "augmented_reward",
      [](double r, double eta, double kappa, int sign) { return augmented_reward(r, eta, RewardWeights{kappa, sign}); },
      py::arg("reward"), py::arg("eta"), py::arg("kappa") = 5e-6, py::arg("sign") = -1);

  // sim
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_static("parse", &parse_scenario, py::arg("text"))
      .def("format", &format_scenario)
      .def("hash", &ScenarioConfig::hash)
      .def_readwrite("ofdm", &ScenarioConfig::ofdm)
      .def_readwrite("pilots", &ScenarioConfig::pilots)
      .def_readwrite("xi_m", &ScenarioConfig::xi_m)
      .def_readwrite("rate_target_bps", &ScenarioConfig::rate_target_bps)
      .def_readwrite("allocator_mode", &ScenarioConfig::allocator_mode)
      .def_readwrite("episode_cap", &ScenarioConfig::episode_cap)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_property(
          "sensing", [](const ScenarioConfig& s) { return to_string(s.sensing); },
          [](ScenarioConfig& s, const std::string& v) { s.sensing = parse_sensing_mode(v); });
  m.def("effective_pilots", &effective_pilots, py::arg("scenario"));

  py::class_<TradeoffRow>(m, "TradeoffRow")
      .def_readonly("range_m", &TradeoffRow::range_m)
      .def_readonly("n_s", &TradeoffRow::n_s)
      .def_readonly("n_c", &TradeoffRow::n_c)
      .def_readonly("x_var_m2", &TradeoffRow::x_var_m2)
      .def_readonly("certainty_db", &TradeoffRow::certainty_db)
      .def_readonly("certainty_db_mm", &TradeoffRow::certainty_db_mm)
      .def_readonly("rate_bps", &TradeoffRow::rate_bps);
  m.def("tradeoff_sweep", &tradeoff_sweep, py::arg("scenario"),
        py::arg("ranges_m") = std::vector<double>{5.0, 10.0, 20.0, 30.0});

  m.def(
      "run_episode",
      [](const ScenarioConfig& s, py::object policy, int episode_index) {
        PolicyFn fn;
        if (policy.is_none()) {
          fn = energy_pump_policy(1e5);
        } else if (py::isinstance<py::str>(policy)) {
          fn = as_policy_fn(load_checkpoint(policy.cast<std::string>()).policy);
        } else {
          auto cb = policy.cast<std::function<py::tuple(double, double, double)>>();
          fn = [cb](const BeliefState& b) {
            py::gil_scoped_acquire gil;
            const py::tuple t = cb(b.x_hat, b.v_hat, b.x_var);
            return AgentAction{t[0].cast<double>(), t[1].cast<double>()};
          };
        }
        const EpisodeLog log = run_episode(s, fn, episode_index);
        py::dict d;
        d["scenario_hash"] = log.scenario_hash;
        d["seed"] = log.seed;
        d["success"] = log.summary.success;
        d["qis_to_goal"] = log.summary.qis_to_goal;
        d["rate_met_fraction"] = log.summary.rate_met_fraction;
        py::list recs;
        for (const auto& r : log.records) recs.append(record_dict(r));
        d["records"] = recs;
        return d;
      },
      py::arg("scenario"), py::arg("policy") = py::none(), py::arg("episode_index") = 0,
      "policy: None (scripted energy pump), a checkpoint path, or a callable (x_hat, v_hat, x_var) -> (force, eta)");
}
