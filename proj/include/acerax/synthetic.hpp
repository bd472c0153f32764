#pragma once

// Random policies and replay data for checks that need windows without
// running an environment.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "acerax/gaussian_policy.hpp"
#include "acerax/nn.hpp"
#include "acerax/replay.hpp"

namespace acerax {

/// Adds N(0, scale^2) noise to every parameter.
inline DenseNet perturbed(DenseNet net, double scale, Rng& rng) {
  std::normal_distribution<double> noise(0.0, scale);
  for (auto& p : net.params()) p += noise(rng);
  return net;
}

inline PolicyParams perturbed(const PolicyParams& p, double scale, Rng& rng) {
  return {perturbed(p.mu_net, scale, rng), perturbed(p.eta_net, scale, rng)};
}

/// A trajectory of `count` transitions with standard-normal states and
/// rewards, actions drawn from `behaviour`. Each step ends an episode with
/// probability `terminal_prob` (as a terminal or, equally likely, a time-limit
/// cut).
inline ReplayBuffer synthetic_buffer(const PolicyParams& behaviour, std::size_t count, double terminal_prob,
                                     Rng& rng) {
  ReplayBuffer buffer(count);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution ends(terminal_prob), coin(0.5);
  auto random_state = [&] {
    Eigen::VectorXd s(behaviour.state_dim());
    for (auto& x : s) x = normal(rng);
    return s;
  };
  Eigen::VectorXd s = random_state();
  for (std::size_t k = 0; k < count; ++k) {
    const GaussianHead h = head(behaviour, s);
    Transition t;
    t.s = s;
    t.a = sample(h, standard_normal(h.dim(), rng));
    t.r = normal(rng);
    t.m = h.mu;
    t.phi = std::exp(log_density(h, t.a));
    if (ends(rng)) (coin(rng) ? t.terminal : t.truncated) = true;
    t.next_s = random_state();
    s = t.ends_episode() ? random_state() : t.next_s;
    buffer.push(std::move(t), h);
  }
  return buffer;
}

}  // namespace acerax
