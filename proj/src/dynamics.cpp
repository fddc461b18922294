#include "isacdt/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isacdt {

AgvState step(const AgvState& state, double force, const std::array<double, 2>& noise,
              const DynamicsConstants& k) {
  const double a = std::clamp(force, k.force_min, k.force_max);
  AgvState next;
  next.x = state.x + state.v + noise[0];
  next.v = state.v - k.gravity * std::cos(3.0 * state.x) + k.force_gain * a + noise[1];
  next.v = std::clamp(next.v, -k.v_max, k.v_max);
  next.x = std::clamp(next.x, k.x_min, k.x_max);
  if (next.x <= k.x_min && next.v < 0.0) next.v = 0.0;
  return next;
}

StepOutcome goal_reward(const AgvState& /*prev*/, double force, const AgvState& next,
                        const DynamicsConstants& k) {
  StepOutcome out;
  out.done = next.x >= k.goal_x;
  out.reward = -k.action_cost * force * force;
  if (out.done) out.reward += k.goal_reward;
  return out;
}

std::array<double, 2> sample_process_noise(const DynamicsConstants& k, Rng& rng) {
  const auto& c = k.process_noise_cov;
  if (c[0] < 0.0 || c[3] < 0.0 || c[0] * c[3] - c[1] * c[2] < -1e-30)
    throw std::invalid_argument("process noise covariance is not positive semi-definite");
  std::normal_distribution<double> n01(0.0, 1.0);
  const double z0 = n01(rng);
  const double z1 = n01(rng);
  const double l00 = std::sqrt(c[0]);
  const double l10 = l00 > 0.0 ? c[2] / l00 : 0.0;
  const double l11 = std::sqrt(std::max(0.0, c[3] - l10 * l10));
  return {l00 * z0, l10 * z0 + l11 * z1};
}

double mechanical_energy(const AgvState& s, const DynamicsConstants& k) {
  return 0.5 * s.v * s.v + k.gravity / 3.0 * (std::sin(3.0 * s.x) + 1.0);
}

}  // namespace isacdt
