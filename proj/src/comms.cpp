#include "isacdt/comms.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <stdexcept>

namespace isacdt {

LinkStats link_stats(const OfdmConfig& cfg, const PilotConfig& pilots, int n_c, double range_m) {
  if (n_c < 0) throw std::domain_error("n_c must be non-negative");
  if (!(range_m > 0.0)) throw std::domain_error("range must be positive");
  LinkStats s;
  if (n_c == 0) return s;

  const double nc = static_cast<double>(n_c);
  const double path = 4.0 * kPi * range_m * cfg.carrier_hz;
  s.beta = (pilots.fading_scales_with_nc ? nc : 1.0) * cfg.tx_gain * kSpeedOfLight * kSpeedOfLight / (path * path);

  const double pilot_energy = pilots.pilot_length * pilots.pilot_power_w;
  const double pilot_noise = pilots.pilot_noise_w.value_or(cfg.subcarrier_noise_w() * nc);
  const double denom = pilot_energy * s.beta + pilot_noise;
  s.sigma_hhat_sq = pilot_energy * s.beta * s.beta / denom;
  // beta - sigma_hhat^2 in a cancellation-free form.
  s.eps_sq = s.beta * pilot_noise / denom;

  s.noise_w = cfg.subcarrier_noise_w() * nc;
  s.gamma_c = cfg.tx_power_w * s.sigma_hhat_sq / (cfg.tx_power_w * s.eps_sq + s.noise_w);
  s.rate_bps = pilots.data_fraction() * nc * cfg.subcarrier_spacing_hz * std::log2(1.0 + s.gamma_c);
  return s;
}

long long comm_demand_closed_form(double rate_target_bps, double data_fraction, double subcarrier_spacing_hz,
                                  double gamma_c) {
  if (rate_target_bps <= 0.0) return 0;
  const double per_subcarrier = data_fraction * subcarrier_spacing_hz * std::log2(1.0 + gamma_c);
  if (!(per_subcarrier > 0.0)) return LLONG_MAX;
  return static_cast<long long>(std::ceil(rate_target_bps / per_subcarrier));
}

CommDemand required_comm_subcarriers(const OfdmConfig& cfg, const PilotConfig& pilots, double rate_target_bps,
                                     double range_m) {
  if (rate_target_bps < 0.0) throw std::domain_error("rate target must be non-negative");
  if (!(range_m > 0.0)) throw std::domain_error("range must be positive");
  CommDemand d;
  if (rate_target_bps == 0.0) return d;

  constexpr long long kCountCap = INT_MAX / 2;
  const int max_rounds = 4 * cfg.num_subcarriers;
  const auto rate_at = [&](long long n) { return link_stats(cfg, pilots, static_cast<int>(n), range_m).rate_bps; };

  long long n = 1;
  for (d.iterations = 0; d.iterations < max_rounds; ++d.iterations) {
    const double gamma = link_stats(cfg, pilots, static_cast<int>(n), range_m).gamma_c;
    long long next = comm_demand_closed_form(rate_target_bps, pilots.data_fraction(), cfg.subcarrier_spacing_hz, gamma);
    next = std::min(std::max(next, 1LL), kCountCap);
    if (next == n) break;
    n = next;
  }
  if (n >= kCountCap) {
    d.count = static_cast<int>(kCountCap);
    d.overflow = true;
    return d;
  }

  // The ceiling is taken on a floating-point quotient; settle the integer
  // boundary against the rate itself so the count is the exact minimum.
  for (int guard = 0; guard < max_rounds && n > 1 && rate_at(n - 1) >= rate_target_bps; ++guard) --n;
  for (int guard = 0; guard < max_rounds && n < kCountCap && rate_at(n) < rate_target_bps; ++guard) ++n;

  d.count = static_cast<int>(n);
  d.overflow = n > cfg.num_subcarriers;
  d.gamma_c = link_stats(cfg, pilots, d.count, range_m).gamma_c;
  return d;
}

PilotConfig calibrate_pilot_power(const OfdmConfig& cfg, PilotConfig pilots, int n_c, double range_m,
                                  double rate_target_bps) {
  double lo = -30.0;  // log10 W
  double hi = 6.0;
  const auto rate_with = [&](double log_power) {
    pilots.pilot_power_w = std::pow(10.0, log_power);
    return link_stats(cfg, pilots, n_c, range_m).rate_bps;
  };
  if (rate_with(hi) < rate_target_bps)
    throw std::invalid_argument("rate target above the perfect-CSI rate; cannot calibrate pilot power");
  if (rate_with(lo) > rate_target_bps)
    throw std::invalid_argument("rate target below the minimum pilot power rate");
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rate_with(mid) < rate_target_bps ? lo : hi) = mid;
  }
  pilots.pilot_power_w = std::pow(10.0, 0.5 * (lo + hi));
  return pilots;
}

}  // namespace isacdt
