#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "acerax/adam.hpp"
#include "acerax/config.hpp"
#include "acerax/dispersion.hpp"
#include "acerax/envs.hpp"
#include "acerax/errors.hpp"
#include "acerax/gaussian_policy.hpp"
#include "acerax/nn.hpp"
#include "acerax/replay.hpp"
#include "acerax/td.hpp"

namespace acerax {

struct ActionBox {
  Eigen::VectorXd low;
  Eigen::VectorXd high;
};

/// Trainable state: policy networks, critic, and one ADAM state each.
struct Learner {
  PolicyParams policy;
  DenseNet critic;
  AdamState mu_opt;
  AdamState eta_opt;
  AdamState critic_opt;
  ActionBox box;
};

inline Learner make_learner(const Config& config, const EnvSpec& env, Rng& rng) {
  config.validate();
  const int sd = env.state_dim;
  const int ad = env.action_dim;
  Learner l;
  l.policy.mu_net = DenseNet::glorot(layer_sizes(sd, config.shapes.mu, ad), rng);
  l.policy.eta_net = DenseNet::glorot(layer_sizes(sd, config.shapes.eta, ad), rng);
  const std::size_t out = l.policy.eta_net.layer_count() - 1;
  if (config.mode == ExplorationMode::adaptive) {
    l.policy.eta_net.bias(out).setConstant(config.eta_output_bias);
  } else {
    if (config.sigma.size() != 1 && config.sigma.size() != static_cast<std::size_t>(ad))
      throw config_error("sigma needs 1 or " + std::to_string(ad) + " entries");
    l.policy.eta_net.weights(out).setZero();
    for (int j = 0; j < ad; ++j)
      l.policy.eta_net.bias(out)[j] = std::log(config.sigma.size() == 1 ? config.sigma[0] : config.sigma[j]);
  }
  l.critic = DenseNet::glorot(layer_sizes(sd, config.shapes.critic, 1), rng);
  l.mu_opt = AdamState(l.policy.mu_net.parameter_count(), config.step_sizes.actor);
  l.eta_opt = AdamState(l.policy.eta_net.parameter_count(), config.step_sizes.eta);
  l.critic_opt = AdamState(l.critic.parameter_count(), config.step_sizes.critic);
  l.box = {env.action_low, env.action_high};
  return l;
}

/// Quadratic hinge outside the action box: coeff * sum_j excess_j^2.
inline double box_penalty(const Eigen::VectorXd& mu, const ActionBox& box, double coeff) {
  const Eigen::ArrayXd above = (mu - box.high).array().max(0.0);
  const Eigen::ArrayXd below = (box.low - mu).array().max(0.0);
  return coeff * (above.square() + below.square()).sum();
}

template <typename A>
Eigen::VectorXd box_penalty_gradient(const Eigen::MatrixBase<A>& mu, const ActionBox& box, double coeff) {
  const Eigen::ArrayXd above = (mu - box.high).array().max(0.0);
  const Eigen::ArrayXd below = (box.low - mu).array().max(0.0);
  return (2.0 * coeff * (above - below)).matrix();
}

/// e * dV(s_i)/dnu; e is a constant.
inline FlatGradient critic_grad(const Window& w, const DenseNet& critic, double e) {
  return critic.backward(w.first().s, Eigen::VectorXd::Constant(1, e));
}

/// e * d ln phi(a_i)/d theta_mu - d p(mu(s_i))/d theta_mu.
inline FlatGradient actor_grad(const Window& w, const PolicyParams& params, double e, double penalty_coeff,
                               const ActionBox& box) {
  const Transition& t = w.first();
  const GaussianHead h = head(params, t.s);
  detail::require_shape(t.a.size() == h.dim(), "actor_grad: action dimension mismatch");
  const Eigen::VectorXd upstream =
      e * log_density_mu_gradient(h.mu, h.eta, t.a) - box_penalty_gradient(h.mu, box, penalty_coeff);
  return params.mu_net.backward(t.s, upstream);
}

/// Averages over one minibatch of replayed windows.
struct ReplayMetrics {
  bool performed = false;
  double critic_loss = 0.0;      // mean e^2 / 2
  double dispersion_loss = 0.0;  // mean l_i
  double actor_term = 0.0;       // mean e ln phi(a_i)
  Eigen::Index eta_clamp_events = 0;
};

inline std::size_t replay_warmup(const Config& config) {
  return std::max<std::size_t>(static_cast<std::size_t>(config.n) + 1, static_cast<std::size_t>(config.minibatch));
}

/// Gradient estimates of one minibatch, averaged over windows.
struct ReplayGradients {
  FlatGradient critic;
  FlatGradient mu;
  FlatGradient eta;  // empty in fixed_sigma mode
  ReplayMetrics metrics;
};

inline ReplayGradients replay_gradients(const std::vector<Window>& windows, const Learner& learner,
                                        const Config& config) {
  const auto batch = static_cast<Eigen::Index>(windows.size());
  detail::require_shape(batch > 0, "replay_gradients: empty minibatch");
  const PolicyParams& policy = learner.policy;
  const Eigen::Index sd = policy.state_dim();
  const Eigen::Index ad = policy.action_dim();

  Eigen::Index total = 0;
  for (const auto& w : windows) total += static_cast<Eigen::Index>(w.length());

  // Policy columns: every window state. Value columns: the same plus each
  // window's bootstrap state, window by window.
  Eigen::MatrixXd policy_states(sd, total);
  Eigen::MatrixXd value_states(sd, total + batch);
  {
    Eigen::Index p = 0, v = 0;
    for (const auto& w : windows) {
      for (const Transition* t : w.steps) {
        policy_states.col(p++) = t->s;
        value_states.col(v++) = t->s;
      }
      value_states.col(v++) = w.final_state();
    }
  }
  const Eigen::MatrixXd mu = policy.mu_net.forward_batch(policy_states);
  const Eigen::MatrixXd raw_eta = policy.eta_net.forward_batch(policy_states);
  Eigen::MatrixXd eta = raw_eta;
  ReplayGradients out;
  out.metrics.performed = true;
  out.metrics.eta_clamp_events = clamp_eta(eta);
  const Eigen::RowVectorXd values = learner.critic.forward_batch(value_states).row(0);

  Eigen::MatrixXd first_states(sd, batch);
  Eigen::MatrixXd critic_up(1, batch);
  Eigen::MatrixXd mu_up(ad, batch);
  Eigen::MatrixXd eta_up(ad, batch);
  const bool adaptive = config.mode == ExplorationMode::adaptive;
  const double inv_batch = 1.0 / static_cast<double>(batch);

  Eigen::Index p = 0;
  for (Eigen::Index w = 0; w < batch; ++w) {
    const Window& win = windows[static_cast<std::size_t>(w)];
    const auto L = static_cast<Eigen::Index>(win.length());
    Eigen::VectorXd log_ratios(L);
    for (Eigen::Index k = 0; k < L; ++k)
      log_ratios[k] = log_density_ratio(mu.col(p + k), eta.col(p + k), *win.steps[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd v = values.segment(p + w, L + 1).transpose();
    const double e = temporal_difference(win, v, log_ratios, config.gamma, config.b, config.hard_truncation);

    const Transition& t = win.first();
    const auto mu0 = mu.col(p);
    const auto eta0 = eta.col(p);
    first_states.col(w) = t.s;
    critic_up(0, w) = e * inv_batch;
    mu_up.col(w) = (e * log_density_mu_gradient(mu0, eta0, t.a) -
                    box_penalty_gradient(mu0, learner.box, config.penalty_coeff)) *
                   inv_batch;
    if (adaptive) {
      Eigen::VectorXd g = dispersion_eta_gradient(mu0, eta0, t.a, t.m, config.alpha);
      for (Eigen::Index j = 0; j < ad; ++j)
        if (raw_eta(j, p) != eta(j, p)) g[j] = 0.0;  // flat outside the clamp
      eta_up.col(w) = g * inv_batch;
    }

    out.metrics.critic_loss += 0.5 * e * e * inv_batch;
    out.metrics.actor_term += e * log_density(mu0, eta0, t.a) * inv_batch;
    out.metrics.dispersion_loss += dispersion_loss(mu0, eta0, t.a, t.m, config.alpha) * inv_batch;
    p += L;
  }

  out.critic = learner.critic.backward_batch(first_states, critic_up);
  out.mu = policy.mu_net.backward_batch(first_states, mu_up);
  if (adaptive) out.eta = policy.eta_net.backward_batch(first_states, eta_up);
  return out;
}

/// Applies averaged improvement directions: ascent for the critic and the
/// mean network, descent on the dispersion loss for the log-std network.
inline void apply_gradients(Learner& learner, const ReplayGradients& g) {
  adam_step(learner.critic_opt, learner.critic.params(), g.critic, Direction::ascent);
  adam_step(learner.mu_opt, learner.policy.mu_net.params(), g.mu, Direction::ascent);
  if (g.eta.size() > 0) adam_step(learner.eta_opt, learner.policy.eta_net.params(), g.eta, Direction::descent);
}

/// One pass of the replay procedure over a minibatch of windows drawn
/// uniformly with replacement. Does nothing until the buffer holds
/// max(n + 1, minibatch) transitions.
inline ReplayMetrics replay_step(const ReplayBuffer& buffer, Learner& learner, const Config& config, Rng& rng) {
  if (buffer.size() < replay_warmup(config) || !buffer.ready(config.n)) return {};
  std::vector<Window> windows;
  windows.reserve(static_cast<std::size_t>(config.minibatch));
  for (int k = 0; k < config.minibatch; ++k) windows.push_back(*buffer.sample_window(config.n, rng));
  const ReplayGradients g = replay_gradients(windows, learner, config);
  apply_gradients(learner, g);
  return g.metrics;
}

}  // namespace acerax
