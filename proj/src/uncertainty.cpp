#include "isacdt/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isacdt/sensing.hpp"

namespace isacdt {

AccuracyTarget AccuracyTarget::make(double xi_m, double eta) {
  if (!(xi_m > 0.0) || !(eta > 0.0)) throw std::domain_error("accuracy target needs xi > 0 and eta > 0");
  AccuracyTarget t;
  t.xi_sq = xi_m * xi_m;
  t.eta = eta;
  t.xibar_sq = std::min(t.xi_sq, 1.0 / eta);
  return t;
}

PositionBelief position_moments(const PolarBelief& b) {
  PositionBelief p;
  const double mean_cos = std::cos(b.theta_mean) * std::exp(-b.theta_var / 2.0);
  p.x_mean = b.r_mean * mean_cos;
  p.upsilon_term = 0.5 + 0.5 * std::cos(2.0 * b.theta_mean) * std::exp(-2.0 * b.theta_var);
  p.gamma_term = std::max(0.0, b.r_mean * b.r_mean * (p.upsilon_term - mean_cos * mean_cos));
  p.x_var = p.gamma_term + b.r_var * p.upsilon_term;
  return p;
}

SensingDemand required_sensing_subcarriers(const AccuracyTarget& target, const PolarBelief& belief, double gamma_s,
                                           const OfdmConfig& cfg) {
  if (!(gamma_s > 0.0)) throw std::domain_error("sensing SNR must be positive");
  const PositionBelief pm = position_moments(belief);
  const double slack = target.xibar_sq - pm.gamma_term;
  SensingDemand d;
  if (!(slack > 0.0)) {
    d.feasible = false;
    d.count = cfg.num_subcarriers + 1;
    return d;
  }
  if (pm.upsilon_term == 0.0) {
    d.count = 1;
    return d;
  }

  const double k = 4.0 * kPi * cfg.subcarrier_spacing_hz;
  const double bound =
      std::sqrt(6.0 * kSpeedOfLight * kSpeedOfLight * pm.upsilon_term / (slack * k * k * gamma_s) + 1.0);
  constexpr double kCountCap = 1e9;
  if (bound >= kCountCap) {
    d.count = static_cast<int>(kCountCap);
    return d;
  }

  const auto fits = [&](int n) {
    PolarBelief with_crb = belief;
    const double sr = range_crb_std(cfg, n, gamma_s);
    with_crb.r_var = sr * sr;
    return position_moments(with_crb).x_var <= target.xibar_sq;
  };
  int n = std::max(2, static_cast<int>(std::ceil(bound)));
  for (int guard = 0; guard < 64 && n > 2 && fits(n - 1); ++guard) --n;
  for (int guard = 0; guard < 64 && !fits(n); ++guard) ++n;
  d.count = n;
  return d;
}

}  // namespace isacdt
