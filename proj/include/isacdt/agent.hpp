#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "isacdt/nn.hpp"

namespace isacdt {

/// The agent's estimate of the plant state, in task units.
struct BeliefState {
  double x_hat = -0.5;
  double v_hat = 0.0;
  double x_var = 0.0;
  double v_var = 0.0;
};

/// Control force and requested position accuracy eta = 1 / sigma_x^2 (1/m^2).
struct AgentAction {
  double force = 0.0;
  double eta = 1.0;
};

struct ActionSpace {
  double eta_min = 1.0;
  double eta_max = 1e5;
};

/// Weight and sign of the observation-cost term added to the task reward.
struct RewardWeights {
  double kappa = 5e-6;
  int eta_cost_sign = -1;  // -1: accuracy is a cost; +1: r + kappa * eta verbatim
};

/// r + sign * kappa * eta.
double augmented_reward(double reward, double eta, const RewardWeights& w);

struct TrainConfig {
  double discount = 0.99;
  double clip_ratio = 0.2;
  int epochs = 10;
  int rollout_steps = 2048;
  int minibatch = 256;
  double gae_lambda = 0.95;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  bool anneal_lr = true;
  double max_grad_norm = 0.5;
  double entropy_coef = 0.0;
  int hidden_units = 64;
  double init_log_std = 0.0;
  ActionSpace actions;
  RewardWeights reward;
  long total_steps = 500000;
  // Potential-based shaping F = discount * Phi(s') - Phi(s) with Phi taken
  // from the environment; leaves the optimal policy unchanged.
  double shaping_weight = 10.0;
  // Rewards are multiplied by this before entering the critic targets.
  double reward_scale = 0.05;
  int eval_interval = 5;  // updates between deterministic evaluations
  int eval_episodes = 10;
  int early_stop_evals = 0;  // stop after this many consecutive perfect evaluations (0 = never)
};

/// Gaussian actor over pre-squash actions plus a state-value critic. Force is
/// tanh-squashed to [-1, 1]; eta is squashed onto a log-uniform scale over
/// [eta_min, eta_max].
struct Policy {
  Mlp actor;
  Mlp critic;
  Eigen::Vector2d log_std = Eigen::Vector2d::Zero();
  ActionSpace actions;

  Policy() = default;
  Policy(int hidden_units, ActionSpace space, double init_log_std, Rng& rng);

  static constexpr int kFeatures = 3;
  /// (x_hat, v_hat, log10 x_var) mapped to roughly unit scale.
  static Eigen::Vector3d features(const BeliefState& b);
  AgentAction squash(const Eigen::Vector2d& pre) const;
  Eigen::Vector2d mean(const BeliefState& b) const;
  double value(const BeliefState& b) const;
};

enum class ActMode { Stochastic, Deterministic };

AgentAction act(const Policy& policy, const BeliefState& belief, Rng& rng, ActMode mode = ActMode::Stochastic);
AgentAction act_deterministic(const Policy& policy, const BeliefState& belief);

using PolicyFn = std::function<AgentAction(const BeliefState&)>;
/// Deterministic-mode policy as a callable.
PolicyFn as_policy_fn(const Policy& policy);

struct EnvStep {
  BeliefState obs;
  double reward = 0.0;       // augmented reward
  double base_reward = 0.0;  // task reward alone
  bool done = false;         // goal reached
  bool truncated = false;    // episode cap reached
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual BeliefState reset(std::uint64_t episode_seed) = 0;
  virtual EnvStep step(const AgentAction& action) = 0;
  /// True when the current episode has ended (including episodes that start
  /// at the goal).
  virtual bool terminal() const = 0;
  virtual double shaping_potential(const BeliefState&) const { return 0.0; }
  virtual std::unique_ptr<Environment> clone() const = 0;
};

struct EpisodeOutcome {
  bool success = false;
  int qis = 0;
  double total_reward = 0.0;
  double discounted_reward = 0.0;
  double mean_eta = 0.0;
};

struct EvalResult {
  double success_rate = 0.0;
  double mean_qis_to_goal = 0.0;  // failures count with their (capped) length
  double mean_eta = 0.0;          // mean of per-episode means over episodes with >= 1 QI
  std::vector<EpisodeOutcome> episodes;
};

/// `discount` only affects EpisodeOutcome::discounted_reward.
EvalResult evaluate(const PolicyFn& policy, Environment& env, int episodes, std::uint64_t seed,
                    double discount = 0.99);
EvalResult evaluate(const Policy& policy, Environment& env, int episodes, std::uint64_t seed,
                    double discount = 0.99);
EvalResult aggregate(std::vector<EpisodeOutcome> episodes);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainLogEntry {
  int update = 0;
  long env_steps = 0;
  int episodes_finished = 0;
  double mean_episode_return = 0.0;  // augmented reward, unshaped
  double train_success = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_eta = 0.0;
  bool evaluated = false;
  double eval_success = 0.0;
  double eval_mean_qis = 0.0;
};

struct TrainResult {
  Policy policy;  // best deterministic evaluation: success rate, then discounted return
  std::vector<TrainLogEntry> curve;
  long env_steps = 0;
  double best_eval_success = 0.0;
};

/// Clipped-surrogate actor-critic training with GAE. Evaluation rollouts run
/// on a clone of `env` and are not counted in `env_steps`.
TrainResult train(Environment& env, const TrainConfig& cfg, std::uint64_t seed);

// Building blocks of the update, exposed for testing.

struct RolloutBatch {
  Eigen::MatrixXd features;  // kFeatures x B
  Eigen::MatrixXd pre_squash;  // 2 x B
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

struct PpoOptimizers {
  Adam actor;
  Adam log_std;
  Adam critic;
};

struct Gae {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// `terminal[t]` stops bootstrapping (goal reached); `boundary[t]` stops the
/// advantage trace (episode ended for any reason).
Gae compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<double>& next_values, const std::vector<bool>& terminal,
                const std::vector<bool>& boundary, double discount, double lambda);

Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& pre_squash, const Eigen::MatrixXd& mean,
                                  const Eigen::Vector2d& log_std);

double clipped_surrogate_loss(const Policy& policy, const RolloutBatch& batch, double clip_ratio,
                              double entropy_coef = 0.0);
double value_loss(const Policy& policy, const RolloutBatch& batch);
/// Gradient of value_loss with respect to the critic parameters.
Eigen::VectorXd value_loss_gradient(const Policy& policy, const RolloutBatch& batch);

/// One optimizer step on the clipped surrogate; returns the pre-step loss.
double actor_step(Policy& policy, const RolloutBatch& batch, const TrainConfig& cfg, PpoOptimizers& opt,
                  double lr_scale = 1.0);
/// One optimizer step on the value loss; returns the pre-step loss.
double critic_step(Policy& policy, const RolloutBatch& batch, const TrainConfig& cfg, PpoOptimizers& opt,
                   double lr_scale = 1.0);

// Checkpoints: versioned JSON holding every parameter and the TrainConfig.
struct Checkpoint {
  Policy policy;
  TrainConfig config;
};
void save_checkpoint(const std::string& path, const Policy& policy, const TrainConfig& config);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace isacdt
