#pragma once

// Random drifted-policy windows and their brute-force temporal difference.

#include <algorithm>
#include <cmath>
#include <vector>

#include "acerax/synthetic.hpp"
#include "acerax/td.hpp"
#include "oracle.hpp"

namespace td_fixture {

using namespace acerax;

inline oracle::Vec flat(const DenseNet& net) {
  return {net.params().data(), net.params().data() + net.parameter_count()};
}
inline oracle::Vec vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline double brute_force(const Window& w, const PolicyParams& p, const DenseNet& critic, double gamma, double b) {
  std::vector<oracle::Step> steps;
  for (const Transition* t : w.steps) {
    const oracle::Vec s = vec(t->s);
    oracle::Vec sigma = oracle::forward(p.eta_net.layer_sizes(), flat(p.eta_net), s);
    for (double& x : sigma) x = std::exp(x);
    steps.push_back({t->r, vec(t->a), oracle::forward(p.mu_net.layer_sizes(), flat(p.mu_net), s), sigma, t->phi,
                     oracle::forward(critic.layer_sizes(), flat(critic), s)[0]});
  }
  const double bootstrap = oracle::forward(critic.layer_sizes(), flat(critic), vec(w.final_state()))[0];
  return oracle::temporal_difference(steps, bootstrap, w.terminal, gamma, b);
}

struct Result {
  double max_relative_error = 0.0;
  int windows = 0;
  int cut_windows = 0;
};

/// `count` windows over every (n, b) combination with a fresh drifted policy
/// per window.
inline Result compare_random_windows(int count, std::uint64_t seed) {
  Rng rng(seed);
  const int ns[] = {1, 3, 10};
  const double bs[] = {1.5, 3.0, 10.0};
  std::uniform_real_distribution<double> drift(0.02, 0.3);
  Result out;
  for (int k = 0; k < count; ++k) {
    const int n = ns[k % 3];
    Config config;
    config.n = n;
    config.b = bs[(k / 3) % 3];
    const int sd = 1 + k % 4, ad = 1 + k % 2;
    const PolicyParams behaviour{DenseNet::glorot({sd, 6, ad}, rng), DenseNet::glorot({sd, 3, ad}, rng)};
    const PolicyParams current = perturbed(behaviour, drift(rng), rng);
    const DenseNet critic = perturbed(DenseNet::glorot({sd, 5, 1}, rng), 0.1, rng);
    const ReplayBuffer buffer = synthetic_buffer(behaviour, static_cast<std::size_t>(3 * n + 2), 0.1, rng);
    const Window w = *buffer.sample_window(n, rng);
    const double e = temporal_difference(w, current, critic, config);
    const double expected = brute_force(w, current, critic, config.gamma, config.b);
    const double rel = std::abs(e - expected) / std::max({std::abs(e), std::abs(expected), 1e-300});
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.windows;
    if (static_cast<int>(w.length()) < n) ++out.cut_windows;
  }
  return out;
}

}  // namespace td_fixture
