#pragma once

#include "isacdt/config.hpp"

namespace isacdt {

struct LinkStats {
  double beta = 0.0;           // large-scale fading
  double sigma_hhat_sq = 0.0;  // MMSE estimate variance
  double eps_sq = 0.0;         // estimation-error variance
  double noise_w = 0.0;        // downlink noise power sigma_w^2
  double gamma_c = 0.0;        // effective SNR
  double rate_bps = 0.0;
};

/// Downlink statistics with n_c communication subcarriers at range r.
/// n_c = 0 yields an all-zero (zero-rate) result.
LinkStats link_stats(const OfdmConfig& cfg, const PilotConfig& pilots, int n_c, double range_m);

struct CommDemand {
  // Smallest n_c with rate(n_c) >= target; may exceed N, in which case
  // `overflow` is set and `count` carries the uncapped demand.
  int count = 0;
  bool overflow = false;
  double gamma_c = 0.0;  // effective SNR at the returned count
  int iterations = 0;
};

/// Resolves the n_c <-> gamma_c circularity by fixed-point iteration of
/// n <- ceil(R / (tau_bar df log2(1 + gamma_c(n)))) from n = 1 (at most 4N
/// rounds), then settles the integer boundary against the rate itself.
CommDemand required_comm_subcarriers(const OfdmConfig& cfg, const PilotConfig& pilots,
                                     double rate_target_bps, double range_m);

/// The fixed-SNR closed form ceil(R / (tau_bar df log2(1 + gamma_c))).
/// Kept as a diagnostic.
long long comm_demand_closed_form(double rate_target_bps, double data_fraction,
                                  double subcarrier_spacing_hz, double gamma_c);

/// Returns `pilots` with the pilot power tuned (bisection in log power) so
/// that rate(n_c, range) equals `rate_target_bps`.
PilotConfig calibrate_pilot_power(const OfdmConfig& cfg, PilotConfig pilots, int n_c, double range_m,
                                  double rate_target_bps);

}  // namespace isacdt
