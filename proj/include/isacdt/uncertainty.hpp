#pragma once

#include "isacdt/config.hpp"

namespace isacdt {

/// Range and elevation belief of the AGV as seen from the access point.
struct PolarBelief {
  double r_mean = 1.0;  // m
  double r_var = 0.0;   // m^2
  double theta_mean = 0.0;
  double theta_var = 0.0;
};

/// Ground-position moments; x_var == gamma_term + r_var * upsilon_term.
struct PositionBelief {
  double x_mean = 0.0;
  double x_var = 0.0;
  double gamma_term = 0.0;    // angle-induced variance r^2 Var[cos theta]
  double upsilon_term = 0.0;  // E[cos^2 theta], in [0, 1]
};

/// Position-variance target: the tighter of the twin's cap xi^2 and the
/// agent's requested accuracy 1 / eta.
struct AccuracyTarget {
  double xi_sq = 4e-4;
  double eta = 1.0;
  double xibar_sq = 4e-4;

  static AccuracyTarget make(double xi_m, double eta);
};

/// Mean and variance of x = r cos(theta) for independent r (mean, variance
/// given) and theta ~ N(theta_mean, theta_var):
///   x_mean = r cos(th) e^{-s^2/2}
///   Upsilon = 1/2 + 1/2 cos(2 th) e^{-2 s^2}
///   Gamma = r^2 (Upsilon - (cos(th) e^{-s^2/2})^2)
PositionBelief position_moments(const PolarBelief& belief);

struct SensingDemand {
  // Smallest n_s meeting x_var <= xibar^2; may exceed N.
  int count = 0;
  // False when xibar^2 <= Gamma: angle uncertainty alone exceeds the budget.
  // count is then N + 1.
  bool feasible = true;
};

/// Closed-form sensing demand
///   n_s >= sqrt(6 c^2 Upsilon / ((xibar^2 - Gamma) (4 pi df)^2 gamma_s) + 1)
/// with Gamma and Upsilon from position_moments(belief). The angle variance
/// in `belief` is held fixed (it does not depend on n_s). The ceiling is
/// settled against the range CRB so that the result is the exact minimum.
SensingDemand required_sensing_subcarriers(const AccuracyTarget& target, const PolarBelief& belief,
                                           double gamma_s, const OfdmConfig& cfg);

}  // namespace isacdt
