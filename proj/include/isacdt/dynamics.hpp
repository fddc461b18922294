#pragma once

#include <array>

#include "isacdt/config.hpp"

namespace isacdt {

/// Mountain-car plant state in task units.
struct AgvState {
  double x = -0.5;  // position, [-1.2, 0.6]
  double v = 0.0;   // velocity, [-0.07, 0.07]

  bool operator==(const AgvState&) const = default;
};

struct DynamicsConstants {
  double gravity = 0.0025;
  double force_gain = 0.0015;
  // Row-major 2x2 covariance of the additive process noise.
  std::array<double, 4> process_noise_cov{1e-8, 0.0, 0.0, 1e-8};
  double force_min = -1.0;
  double force_max = 1.0;
  double x_min = -1.2;
  double x_max = 0.6;
  double v_max = 0.07;
  double goal_x = 0.45;
  double goal_reward = 100.0;
  double action_cost = 0.1;
};

/// One transition s' = f(s) + B a + u, with position advanced by the
/// pre-update velocity. Force is clamped to the force range and the result
/// to the state box; hitting the left wall with negative velocity stops the
/// car.
AgvState step(const AgvState& state, double force, const std::array<double, 2>& noise,
              const DynamicsConstants& k = {});

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
};

/// Goal reward of the continuous task: +100 on reaching x >= 0.45 and a
/// quadratic action cost every step.
StepOutcome goal_reward(const AgvState& prev, double force, const AgvState& next,
                        const DynamicsConstants& k = {});

/// Draws u ~ N(0, C_u) via a 2x2 Cholesky factor.
std::array<double, 2> sample_process_noise(const DynamicsConstants& k, Rng& rng);

/// Mechanical energy 0.5 v^2 + (gravity / 3) (sin 3x + 1); non-negative.
double mechanical_energy(const AgvState& s, const DynamicsConstants& k = {});

}  // namespace isacdt
