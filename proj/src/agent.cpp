#include "isacdt/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace isacdt {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}  // namespace

double augmented_reward(double reward, double eta, const RewardWeights& w) {
  return reward + static_cast<double>(w.eta_cost_sign) * w.kappa * eta;
}

Policy::Policy(int hidden_units, ActionSpace space, double init_log_std, Rng& rng)
    : actor({kFeatures, hidden_units, hidden_units, 2}, rng, 0.01),
      critic({kFeatures, hidden_units, hidden_units, 1}, rng, 1.0),
      log_std(Eigen::Vector2d::Constant(init_log_std)),
      actions(space) {
  if (!(space.eta_min > 0.0) || !(space.eta_max > space.eta_min))
    throw std::invalid_argument("need 0 < eta_min < eta_max");
}

Eigen::Vector3d Policy::features(const BeliefState& b) {
  const double log_var = std::log10(std::max(b.x_var, 1e-12));
  return {(b.x_hat + 0.3) / 0.9, b.v_hat / 0.07, std::clamp((log_var + 6.0) / 3.0, -2.0, 2.0)};
}

AgentAction Policy::squash(const Eigen::Vector2d& pre) const {
  AgentAction a;
  a.force = std::tanh(pre[0]);
  const double frac = 0.5 * (std::tanh(pre[1]) + 1.0);
  const double lo = std::log(actions.eta_min);
  const double hi = std::log(actions.eta_max);
  a.eta = std::clamp(std::exp(lo + frac * (hi - lo)), actions.eta_min, actions.eta_max);
  return a;
}

Eigen::Vector2d Policy::mean(const BeliefState& b) const {
  return actor.forward(features(b)).col(0);
}

double Policy::value(const BeliefState& b) const { return critic.forward(features(b))(0, 0); }

AgentAction act(const Policy& policy, const BeliefState& belief, Rng& rng, ActMode mode) {
  Eigen::Vector2d pre = policy.mean(belief);
  if (mode == ActMode::Stochastic) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < 2; ++i) pre[i] += std::exp(policy.log_std[i]) * n01(rng);
  }
  return policy.squash(pre);
}

AgentAction act_deterministic(const Policy& policy, const BeliefState& belief) {
  return policy.squash(policy.mean(belief));
}

PolicyFn as_policy_fn(const Policy& policy) {
  return [p = policy](const BeliefState& b) { return act_deterministic(p, b); };
}

EvalResult aggregate(std::vector<EpisodeOutcome> episodes) {
  EvalResult r;
  r.episodes = std::move(episodes);
  if (r.episodes.empty()) return r;
  double successes = 0.0;
  double qis = 0.0;
  double eta = 0.0;
  int eta_count = 0;
  for (const auto& e : r.episodes) {
    successes += e.success ? 1.0 : 0.0;
    qis += e.qis;
    if (e.qis > 0) {
      eta += e.mean_eta;
      ++eta_count;
    }
  }
  const double n = static_cast<double>(r.episodes.size());
  r.success_rate = successes / n;
  r.mean_qis_to_goal = qis / n;
  r.mean_eta = eta_count > 0 ? eta / eta_count : 0.0;
  return r;
}

EvalResult evaluate(const PolicyFn& policy, Environment& env, int episodes, std::uint64_t seed, double discount) {
  std::vector<EpisodeOutcome> outcomes;
  outcomes.reserve(static_cast<size_t>(std::max(episodes, 0)));
  for (int i = 0; i < episodes; ++i) {
    BeliefState obs = env.reset(mix_seed(seed, static_cast<std::uint64_t>(i)));
    EpisodeOutcome e;
    e.success = env.terminal();
    double eta_sum = 0.0;
    double weight = 1.0;
    while (!env.terminal()) {
      const AgentAction a = policy(obs);
      const EnvStep st = env.step(a);
      ++e.qis;
      e.total_reward += st.reward;
      e.discounted_reward += weight * st.reward;
      weight *= discount;
      eta_sum += a.eta;
      obs = st.obs;
      if (st.done) e.success = true;
      if (st.done || st.truncated) break;
    }
    e.mean_eta = e.qis > 0 ? eta_sum / e.qis : 0.0;
    outcomes.push_back(e);
  }
  return aggregate(std::move(outcomes));
}

EvalResult evaluate(const Policy& policy, Environment& env, int episodes, std::uint64_t seed, double discount) {
  return evaluate(as_policy_fn(policy), env, episodes, seed, discount);
}

Gae compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<double>& next_values, const std::vector<bool>& terminal,
                const std::vector<bool>& boundary, double discount, double lambda) {
  const size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || terminal.size() != n || boundary.size() != n)
    throw std::invalid_argument("compute_gae: mismatched input lengths");
  Gae g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double running = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double bootstrap = terminal[i] ? 0.0 : next_values[i];
    const double delta = rewards[i] + discount * bootstrap - values[i];
    running = delta + discount * lambda * (boundary[i] ? 0.0 : running);
    g.advantages[i] = running;
    g.returns[i] = running + values[i];
  }
  return g;
}

Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& pre_squash, const Eigen::MatrixXd& mean,
                                  const Eigen::Vector2d& log_std) {
  const Eigen::Array2d inv_std = (-log_std.array()).exp();
  const Eigen::ArrayXXd z = (pre_squash - mean).array().colwise() * inv_std;
  const double norm = log_std.sum() + 2.0 * kHalfLog2Pi;
  return (-0.5 * z.square().colwise().sum() - norm).matrix().transpose();
}

namespace {

struct SurrogateTerms {
  double loss = 0.0;
  Eigen::VectorXd dloss_dlogp;  // per sample
};

SurrogateTerms surrogate(const Eigen::VectorXd& log_prob, const RolloutBatch& batch, double clip_ratio) {
  const Eigen::Index n = log_prob.size();
  SurrogateTerms s;
  s.dloss_dlogp = Eigen::VectorXd::Zero(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(log_prob[i] - batch.log_prob_old[i]);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * adv;
    total += std::min(unclipped, clipped);
    if (unclipped <= clipped) s.dloss_dlogp[i] = -unclipped / static_cast<double>(n);
  }
  s.loss = -total / static_cast<double>(n);
  return s;
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw TrainingDiverged(std::string("non-finite ") + what);
}

}  // namespace

double clipped_surrogate_loss(const Policy& policy, const RolloutBatch& batch, double clip_ratio,
                              double entropy_coef) {
  const Eigen::MatrixXd mean = policy.actor.forward(batch.features);
  const Eigen::VectorXd logp = gaussian_log_prob(batch.pre_squash, mean, policy.log_std);
  return surrogate(logp, batch, clip_ratio).loss - entropy_coef * policy.log_std.sum();
}

double value_loss(const Policy& policy, const RolloutBatch& batch) {
  const Eigen::MatrixXd v = policy.critic.forward(batch.features);
  return 0.5 * (v.row(0).transpose() - batch.returns).squaredNorm() / static_cast<double>(batch.returns.size());
}

Eigen::VectorXd value_loss_gradient(const Policy& policy, const RolloutBatch& batch) {
  Mlp::Cache cache;
  const Eigen::MatrixXd v = policy.critic.forward(batch.features, &cache);
  Eigen::MatrixXd dv = (v.row(0) - batch.returns.transpose()) / static_cast<double>(batch.returns.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.critic.params().size());
  policy.critic.backward(cache, dv, grad);
  return grad;
}

double actor_step(Policy& policy, const RolloutBatch& batch, const TrainConfig& cfg, PpoOptimizers& opt,
                  double lr_scale) {
  Mlp::Cache cache;
  const Eigen::MatrixXd mean = policy.actor.forward(batch.features, &cache);
  const Eigen::VectorXd logp = gaussian_log_prob(batch.pre_squash, mean, policy.log_std);
  const SurrogateTerms s = surrogate(logp, batch, cfg.clip_ratio);
  const double loss = s.loss - cfg.entropy_coef * policy.log_std.sum();
  require_finite(loss, "policy loss");

  const Eigen::Array2d inv_var = (-2.0 * policy.log_std.array()).exp();
  const Eigen::MatrixXd diff = batch.pre_squash - mean;
  Eigen::MatrixXd dmean = (diff.array().colwise() * inv_var).matrix();
  dmean = dmean.array().rowwise() * s.dloss_dlogp.transpose().array();

  Eigen::VectorXd dlog_std = Eigen::VectorXd::Zero(2);
  for (int k = 0; k < 2; ++k) {
    const Eigen::ArrayXd z_sq = diff.row(k).array().square() * inv_var[k];
    dlog_std[k] = ((z_sq - 1.0) * s.dloss_dlogp.array()).sum() - cfg.entropy_coef;
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.actor.params().size());
  policy.actor.backward(cache, dmean, grad);
  clip_grad_norm(grad, cfg.max_grad_norm);
  opt.actor.lr = cfg.actor_lr;
  opt.log_std.lr = cfg.actor_lr;
  opt.actor.step(policy.actor.params(), grad, lr_scale);
  Eigen::VectorXd ls = policy.log_std;
  opt.log_std.step(ls, dlog_std, lr_scale);
  policy.log_std = ls;
  return loss;
}

double critic_step(Policy& policy, const RolloutBatch& batch, const TrainConfig& cfg, PpoOptimizers& opt,
                   double lr_scale) {
  Mlp::Cache cache;
  const Eigen::MatrixXd v = policy.critic.forward(batch.features, &cache);
  const Eigen::RowVectorXd err = v.row(0) - batch.returns.transpose();
  const double n = static_cast<double>(batch.returns.size());
  const double loss = 0.5 * err.squaredNorm() / n;
  require_finite(loss, "value loss");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.critic.params().size());
  policy.critic.backward(cache, err / n, grad);
  clip_grad_norm(grad, cfg.max_grad_norm);
  opt.critic.lr = cfg.critic_lr;
  opt.critic.step(policy.critic.params(), grad, lr_scale);
  return loss;
}

TrainResult train(Environment& env, const TrainConfig& cfg, std::uint64_t seed) {
  if (!(cfg.discount >= 0.0 && cfg.discount < 1.0)) throw std::invalid_argument("discount must be in [0, 1)");
  if (!(cfg.clip_ratio > 0.0)) throw std::invalid_argument("clip ratio must be positive");
  if (cfg.rollout_steps <= 0 || cfg.minibatch <= 0 || cfg.epochs <= 0)
    throw std::invalid_argument("rollout, minibatch and epochs must be positive");

  Rng init_rng(mix_seed(seed, 0));
  Rng action_rng(mix_seed(seed, 1));
  Rng shuffle_rng(mix_seed(seed, 2));
  const std::uint64_t episode_seed_base = mix_seed(seed, 3);
  const std::uint64_t eval_seed = mix_seed(seed, 4);

  TrainResult result;
  Policy policy(cfg.hidden_units, cfg.actions, cfg.init_log_std, init_rng);
  result.policy = policy;
  PpoOptimizers opt;
  auto eval_env = env.clone();

  const int steps_per_update = cfg.rollout_steps;
  const int updates = static_cast<int>(std::max<long>(1, cfg.total_steps / steps_per_update));
  std::uint64_t episode_counter = 0;

  const auto fresh_episode = [&]() {
    BeliefState o;
    do {
      o = env.reset(mix_seed(episode_seed_base, episode_counter++));
    } while (env.terminal());
    return o;
  };
  BeliefState obs = fresh_episode();

  const int nf = Policy::kFeatures;
  Eigen::MatrixXd feats(nf, steps_per_update);
  Eigen::MatrixXd next_feats(nf, steps_per_update);
  Eigen::MatrixXd pre(2, steps_per_update);
  Eigen::VectorXd logp_old(steps_per_update);
  std::vector<double> rewards(steps_per_update);
  std::vector<bool> terminal(steps_per_update);
  std::vector<bool> boundary(steps_per_update);

  double episode_return = 0.0;
  double best_score = -1e300;
  int perfect_streak = 0;
  std::normal_distribution<double> n01(0.0, 1.0);

  for (int update = 0; update < updates; ++update) {
    const double lr_scale = cfg.anneal_lr ? 1.0 - static_cast<double>(update) / updates : 1.0;
    TrainLogEntry log;
    log.update = update;
    double finished_return = 0.0;
    double finished_success = 0.0;
    double eta_sum = 0.0;
    const Eigen::Array2d stddev = policy.log_std.array().exp();

    for (int t = 0; t < steps_per_update; ++t) {
      const Eigen::Vector3d f = Policy::features(obs);
      const Eigen::Vector2d mu = policy.actor.forward(f).col(0);
      Eigen::Vector2d u;
      for (int k = 0; k < 2; ++k) u[k] = mu[k] + stddev[k] * n01(action_rng);
      const AgentAction a = policy.squash(u);
      const EnvStep st = env.step(a);
      ++result.env_steps;
      eta_sum += a.eta;

      const double phi_now = env.shaping_potential(obs);
      const double phi_next = st.done ? 0.0 : env.shaping_potential(st.obs);
      const double shaped = st.reward + cfg.shaping_weight * (cfg.discount * phi_next - phi_now);

      feats.col(t) = f;
      next_feats.col(t) = Policy::features(st.obs);
      pre.col(t) = u;
      logp_old[t] = gaussian_log_prob(u, mu, policy.log_std)[0];
      rewards[t] = cfg.reward_scale * shaped;
      terminal[t] = st.done;
      boundary[t] = st.done || st.truncated;
      episode_return += st.reward;

      if (boundary[t]) {
        ++log.episodes_finished;
        finished_return += episode_return;
        finished_success += st.done ? 1.0 : 0.0;
        episode_return = 0.0;
        obs = fresh_episode();
      } else {
        obs = st.obs;
      }
    }
    // The last transition of a rollout carries on into the next one.
    boundary[steps_per_update - 1] = true;

    const Eigen::MatrixXd v = policy.critic.forward(feats);
    const Eigen::MatrixXd nv = policy.critic.forward(next_feats);
    std::vector<double> values(v.data(), v.data() + steps_per_update);
    std::vector<double> next_values(nv.data(), nv.data() + steps_per_update);
    const Gae gae = compute_gae(rewards, values, next_values, terminal, boundary, cfg.discount, cfg.gae_lambda);

    Eigen::VectorXd adv = Eigen::Map<const Eigen::VectorXd>(gae.advantages.data(), steps_per_update);
    const double adv_mean = adv.mean();
    const double adv_std = std::sqrt((adv.array() - adv_mean).square().mean());
    adv = (adv.array() - adv_mean) / (adv_std + 1e-8);
    const Eigen::VectorXd ret = Eigen::Map<const Eigen::VectorXd>(gae.returns.data(), steps_per_update);

    std::vector<int> index(steps_per_update);
    std::iota(index.begin(), index.end(), 0);
    double pl_sum = 0.0;
    double vl_sum = 0.0;
    int batches = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(index.begin(), index.end(), shuffle_rng);
      for (int start = 0; start < steps_per_update; start += cfg.minibatch) {
        const int count = std::min(cfg.minibatch, steps_per_update - start);
        RolloutBatch mb;
        mb.features.resize(nf, count);
        mb.pre_squash.resize(2, count);
        mb.log_prob_old.resize(count);
        mb.advantages.resize(count);
        mb.returns.resize(count);
        for (int j = 0; j < count; ++j) {
          const int i = index[start + j];
          mb.features.col(j) = feats.col(i);
          mb.pre_squash.col(j) = pre.col(i);
          mb.log_prob_old[j] = logp_old[i];
          mb.advantages[j] = adv[i];
          mb.returns[j] = ret[i];
        }
        pl_sum += actor_step(policy, mb, cfg, opt, lr_scale);
        vl_sum += critic_step(policy, mb, cfg, opt, lr_scale);
        ++batches;
      }
    }
    if (!policy.actor.params().allFinite() || !policy.critic.params().allFinite() || !policy.log_std.allFinite())
      throw TrainingDiverged("non-finite parameters after update " + std::to_string(update));

    log.env_steps = result.env_steps;
    log.policy_loss = pl_sum / batches;
    log.value_loss = vl_sum / batches;
    log.mean_eta = eta_sum / steps_per_update;
    if (log.episodes_finished > 0) {
      log.mean_episode_return = finished_return / log.episodes_finished;
      log.train_success = finished_success / log.episodes_finished;
    }

    const bool last = update + 1 == updates;
    if (cfg.eval_episodes > 0 && ((update + 1) % std::max(1, cfg.eval_interval) == 0 || last)) {
      const EvalResult ev = evaluate(policy, *eval_env, cfg.eval_episodes, eval_seed, cfg.discount);
      log.evaluated = true;
      log.eval_success = ev.success_rate;
      log.eval_mean_qis = ev.mean_qis_to_goal;
      double mean_return = 0.0;
      for (const auto& e : ev.episodes) mean_return += e.discounted_reward;
      mean_return /= std::max<size_t>(1, ev.episodes.size());
      const double score = 1e6 * ev.success_rate + mean_return;
      if (score >= best_score) {
        best_score = score;
        result.policy = policy;
        result.best_eval_success = ev.success_rate;
      }
      perfect_streak = ev.success_rate >= 1.0 ? perfect_streak + 1 : 0;
    }
    result.curve.push_back(log);
    if (cfg.early_stop_evals > 0 && perfect_streak >= cfg.early_stop_evals) break;
  }
  if (cfg.eval_episodes <= 0) result.policy = policy;
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "isacdt-policy";
constexpr int kCheckpointVersion = 1;

json mlp_to_json(const Mlp& m) {
  const auto& p = m.params();
  return {{"sizes", m.sizes()}, {"params", std::vector<double>(p.data(), p.data() + p.size())}};
}

Mlp mlp_from_json(const json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  const auto values = j.at("params").get<std::vector<double>>();
  return Mlp(sizes, Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

json config_to_json(const TrainConfig& c) {
  return {{"discount", c.discount},
          {"clip_ratio", c.clip_ratio},
          {"epochs", c.epochs},
          {"rollout_steps", c.rollout_steps},
          {"minibatch", c.minibatch},
          {"gae_lambda", c.gae_lambda},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"anneal_lr", c.anneal_lr},
          {"max_grad_norm", c.max_grad_norm},
          {"entropy_coef", c.entropy_coef},
          {"hidden_units", c.hidden_units},
          {"init_log_std", c.init_log_std},
          {"eta_min", c.actions.eta_min},
          {"eta_max", c.actions.eta_max},
          {"kappa", c.reward.kappa},
          {"eta_cost_sign", c.reward.eta_cost_sign},
          {"total_steps", c.total_steps},
          {"shaping_weight", c.shaping_weight},
          {"reward_scale", c.reward_scale},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes},
          {"early_stop_evals", c.early_stop_evals}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.discount = j.at("discount");
  c.clip_ratio = j.at("clip_ratio");
  c.epochs = j.at("epochs");
  c.rollout_steps = j.at("rollout_steps");
  c.minibatch = j.at("minibatch");
  c.gae_lambda = j.at("gae_lambda");
  c.actor_lr = j.at("actor_lr");
  c.critic_lr = j.at("critic_lr");
  c.anneal_lr = j.at("anneal_lr");
  c.max_grad_norm = j.at("max_grad_norm");
  c.entropy_coef = j.at("entropy_coef");
  c.hidden_units = j.at("hidden_units");
  c.init_log_std = j.at("init_log_std");
  c.actions.eta_min = j.at("eta_min");
  c.actions.eta_max = j.at("eta_max");
  c.reward.kappa = j.at("kappa");
  c.reward.eta_cost_sign = j.at("eta_cost_sign");
  c.total_steps = j.at("total_steps");
  c.shaping_weight = j.at("shaping_weight");
  c.reward_scale = j.at("reward_scale");
  c.eval_interval = j.at("eval_interval");
  c.eval_episodes = j.at("eval_episodes");
  c.early_stop_evals = j.at("early_stop_evals");
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Policy& policy, const TrainConfig& config) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["actor"] = mlp_to_json(policy.actor);
  j["critic"] = mlp_to_json(policy.critic);
  j["log_std"] = {policy.log_std[0], policy.log_std[1]};
  j["eta_min"] = policy.actions.eta_min;
  j["eta_max"] = policy.actions.eta_max;
  j["train_config"] = config_to_json(config);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  const json j = json::parse(in);
  if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error(path + " is not a policy checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  Checkpoint c;
  c.policy.actor = mlp_from_json(j.at("actor"));
  c.policy.critic = mlp_from_json(j.at("critic"));
  const auto ls = j.at("log_std").get<std::vector<double>>();
  c.policy.log_std = {ls.at(0), ls.at(1)};
  c.policy.actions.eta_min = j.at("eta_min");
  c.policy.actions.eta_max = j.at("eta_max");
  c.config = config_from_json(j.at("train_config"));
  return c;
}

}  // namespace isacdt
