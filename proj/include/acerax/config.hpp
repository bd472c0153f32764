#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acerax/errors.hpp"

namespace acerax {

enum class ExplorationMode { adaptive, fixed_sigma };

inline std::string to_string(ExplorationMode mode) {
  return mode == ExplorationMode::adaptive ? "adaptive" : "fixed_sigma";
}

inline ExplorationMode parse_mode(const std::string& s) {
  if (s == "adaptive") return ExplorationMode::adaptive;
  if (s == "fixed_sigma") return ExplorationMode::fixed_sigma;
  throw config_error("unknown mode '" + s + "' (expected adaptive or fixed_sigma)");
}

struct StepSizes {
  double actor = 1e-4;
  double critic = 1e-3;
  double eta = 1e-4;
};

struct NetShapes {
  std::vector<int> mu{64, 48};
  std::vector<int> eta{8, 6};
  std::vector<int> critic{64, 48};
};

/// Everything a training run depends on besides the environment dynamics.
struct Config {
  std::string env = "lqr2";
  std::uint64_t seed = 1;

  double gamma = 0.98;
  int n = 10;           // return horizon
  double b = 3.0;       // soft truncation level
  double alpha = 0.1;   // weight of stored actions in the dispersion loss
  std::size_t memory = 100000;
  int minibatch = 64;
  int gradient_steps = 1;  // replay steps per environment step
  StepSizes step_sizes;
  NetShapes shapes;
  double eta_output_bias = -1.0;
  double penalty_coeff = 1.0;
  ExplorationMode mode = ExplorationMode::adaptive;
  std::vector<double> sigma{0.4};  // fixed_sigma mode; one entry broadcasts
  bool hard_truncation = false;    // min(z, b) instead of b tanh(z / b)

  std::int64_t steps = 200000;
  std::int64_t eval_interval = 5000;
  int eval_episodes = 5;
  double env_noise = 0.01;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw config_error("gamma must lie in [0, 1)");
    if (n < 1) throw config_error("n must be at least 1");
    if (!(b > 1.0)) throw config_error("b must exceed 1");
    if (!(alpha >= 0.0)) throw config_error("alpha must be non-negative");
    if (memory < static_cast<std::size_t>(n) + 1) throw config_error("memory must hold at least n + 1 transitions");
    if (minibatch < 1) throw config_error("minibatch must be positive");
    if (gradient_steps < 1) throw config_error("gradient_steps must be positive");
    if (step_sizes.actor < 0 || step_sizes.critic < 0 || step_sizes.eta < 0)
      throw config_error("step sizes must be non-negative");
    if (penalty_coeff < 0) throw config_error("penalty_coeff must be non-negative");
    if (mode == ExplorationMode::fixed_sigma) {
      if (sigma.empty()) throw config_error("fixed_sigma mode needs sigma");
      for (double s : sigma)
        if (!(s > 0.0)) throw config_error("sigma entries must be positive");
    }
    if (steps < 0) throw config_error("steps must be non-negative");
    if (eval_interval < 1) throw config_error("eval_interval must be positive");
    if (eval_episodes < 1) throw config_error("eval_episodes must be positive");
    if (!(env_noise >= 0.0)) throw config_error("env_noise must be non-negative");
    for (const auto* hidden : {&shapes.mu, &shapes.eta, &shapes.critic})
      for (int h : *hidden)
        if (h <= 0) throw config_error("hidden layer sizes must be positive");
  }

  /// Full-size settings used for the physics benchmarks (HalfCheetah/Hopper/
  /// Walker2D step sizes).
  static Config full_scale() {
    Config c;
    c.gamma = 0.98;
    c.n = 10;
    c.b = 3.0;
    c.alpha = 0.1;
    c.memory = 1000000;
    c.minibatch = 256;
    c.gradient_steps = 1;
    c.step_sizes = {3e-5, 3e-4, 3e-8};
    c.shapes = {{400, 300}, {40, 30}, {400, 300}};
    c.eta_output_bias = -1.0;
    c.steps = 3000000;
    c.eval_interval = 30000;
    c.eval_episodes = 5;
    return c;
  }
};

}  // namespace acerax
