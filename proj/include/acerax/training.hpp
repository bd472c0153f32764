#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "acerax/agent.hpp"
#include "acerax/config.hpp"
#include "acerax/envs.hpp"
#include "acerax/gaussian_policy.hpp"
#include "acerax/replay.hpp"

namespace acerax {

struct MetricsRow {
  std::int64_t step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double min_eta = 0.0;  // min over action dims of mean eta over evaluation states
  double max_eta = 0.0;
  double critic_loss = 0.0;
  double dispersion_loss = 0.0;
  double actor_term = 0.0;
};

struct EvalResult {
  std::vector<double> returns;
  double mean_return = 0.0;
  double std_return = 0.0;  // population std over episodes
  Eigen::VectorXd mean_eta;  // empty when no eta network is given
};

/// Independent stream for a given seed and purpose.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

inline constexpr std::uint64_t kEvalStream = 4;

/// Rolls out a deterministic controller u = controller(s, t) for `episodes`
/// episodes. Rewards are summed without discounting. When `eta_net` is given,
/// its outputs are averaged over every visited state.
inline EvalResult evaluate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>& controller, Env& env,
                           int episodes, std::uint64_t seed, const DenseNet* eta_net = nullptr) {
  if (episodes < 1) throw config_error("evaluation needs at least one episode");
  Rng rng = derive_rng(seed, kEvalStream);
  EvalResult out;
  Eigen::VectorXd eta_sum;
  std::int64_t visited = 0;
  if (eta_net) eta_sum = Eigen::VectorXd::Zero(eta_net->output_size());
  for (int ep = 0; ep < episodes; ++ep) {
    Eigen::VectorXd s = env.reset(rng);
    double total = 0.0;
    for (;;) {
      if (eta_net) {
        eta_sum += eta_net->forward(s);
        ++visited;
      }
      const StepResult r = env.step(env.clip_action(controller(s, env.steps_taken())), rng);
      total += r.reward;
      if (r.terminal || r.truncated) break;
      s = r.next_state;
    }
    out.returns.push_back(total);
  }
  const Eigen::Map<const Eigen::ArrayXd> ret(out.returns.data(), static_cast<Eigen::Index>(out.returns.size()));
  out.mean_return = ret.mean();
  out.std_return = std::sqrt((ret - out.mean_return).square().mean());
  if (eta_net) out.mean_eta = eta_sum / static_cast<double>(visited);
  return out;
}

/// Deterministic evaluation of a policy: action = mean.
inline EvalResult evaluate_policy(const PolicyParams& policy, Env& env, int episodes, std::uint64_t seed) {
  return evaluate([&](const Eigen::VectorXd& s, int) { return policy.mu_net.forward(s); }, env, episodes, seed,
                  &policy.eta_net);
}

/// Linear state feedback u = -K x.
inline EvalResult evaluate_linear(const Eigen::MatrixXd& gain, Env& env, int episodes, std::uint64_t seed) {
  return evaluate([&](const Eigen::VectorXd& s, int) -> Eigen::VectorXd { return -gain * s; }, env, episodes, seed);
}

/// Time-varying feedback u_t = -K_t x_t.
inline EvalResult evaluate_time_varying(const std::vector<Eigen::MatrixXd>& gains, Env& env, int episodes,
                                        std::uint64_t seed) {
  return evaluate(
      [&](const Eigen::VectorXd& s, int t) -> Eigen::VectorXd {
        if (t >= static_cast<int>(gains.size())) throw config_error("time-varying controller shorter than the episode");
        return -gains[static_cast<std::size_t>(t)] * s;
      },
      env, episodes, seed);
}

/// Reference return on lqr2: the finite-horizon Riccati controller, which is
/// optimal for the undiscounted episode return evaluation reports.
inline EvalResult evaluate_lqr2_oracle(Env& env, int episodes, std::uint64_t seed) {
  if (env.name() != "lqr2") throw config_error("the Riccati reference exists only for lqr2");
  return evaluate_time_varying(lqr2_finite_horizon().gains, env, episodes, seed);
}

struct TrainingResult {
  std::vector<MetricsRow> curve;
  Learner learner;
  std::int64_t replay_steps = 0;
  std::int64_t eta_clamp_events = 0;
};

/**
 * Interleaves environment interaction with replay. Each step samples
 * a = mu + xi * sigma at the current state, sends the box-clipped action to
 * the environment and stores (s, a, r, mu, phi). Every eval_interval steps
 * (and after the last one) the policy is evaluated without exploration and a
 * row is appended; the replay columns average the replay steps since the
 * previous row.
 */
inline TrainingResult run_training(Env& env, const Config& config,
                                   const std::function<void(const MetricsRow&)>& on_row = {}) {
  config.validate();
  Rng init_rng = derive_rng(config.seed, 0);
  Rng env_rng = derive_rng(config.seed, 1);
  Rng noise_rng = derive_rng(config.seed, 2);
  Rng replay_rng = derive_rng(config.seed, 3);

  TrainingResult result;
  result.learner = make_learner(config, env.spec(), init_rng);
  Learner& learner = result.learner;
  ReplayBuffer buffer(config.memory);
  const int ad = env.spec().action_dim;
  const std::unique_ptr<Env> eval_env = env.clone();

  ReplayMetrics acc;
  std::int64_t acc_count = 0;
  auto emit = [&](std::int64_t step) {
    const EvalResult ev = evaluate_policy(learner.policy, *eval_env, config.eval_episodes, config.seed);
    MetricsRow row;
    row.step = step;
    row.mean_return = ev.mean_return;
    row.std_return = ev.std_return;
    row.min_eta = ev.mean_eta.minCoeff();
    row.max_eta = ev.mean_eta.maxCoeff();
    if (acc_count > 0) {
      row.critic_loss = acc.critic_loss / static_cast<double>(acc_count);
      row.dispersion_loss = acc.dispersion_loss / static_cast<double>(acc_count);
      row.actor_term = acc.actor_term / static_cast<double>(acc_count);
    }
    acc = {};
    acc_count = 0;
    result.curve.push_back(row);
    if (on_row) on_row(row);
  };

  Eigen::VectorXd s = env.reset(env_rng);
  for (std::int64_t t = 0;; ++t) {
    if (t % config.eval_interval == 0 || t == config.steps) {
      emit(t);
    }
    if (t == config.steps) break;

    const GaussianHead h = head(learner.policy, s);
    if (h.eta_clamped) ++result.eta_clamp_events;
    const Eigen::VectorXd a = sample(h, standard_normal(ad, noise_rng));
    const double phi = std::exp(log_density(h, a));
    const StepResult r = env.step(env.clip_action(a), env_rng);
    Transition tr{s, a, r.reward, h.mu, phi, r.terminal, r.truncated, r.next_state, 0};
    buffer.push(std::move(tr), h);
    s = (r.terminal || r.truncated) ? env.reset(env_rng) : r.next_state;

    for (int g = 0; g < config.gradient_steps; ++g) {
      const ReplayMetrics m = replay_step(buffer, learner, config, replay_rng);
      if (!m.performed) continue;
      ++result.replay_steps;
      result.eta_clamp_events += m.eta_clamp_events;
      acc.critic_loss += m.critic_loss;
      acc.dispersion_loss += m.dispersion_loss;
      acc.actor_term += m.actor_term;
      ++acc_count;
    }
  }
  return result;
}

}  // namespace acerax
