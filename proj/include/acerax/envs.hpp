#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acerax/errors.hpp"
#include "acerax/nn.hpp"

namespace acerax {

struct EnvSpec {
  int state_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  int max_episode_steps = 0;
  double reward_min = 0.0;  // per-step bounds
  double reward_max = 0.0;
};

struct StepResult {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool terminal = false;   // reached an absorbing state
  bool truncated = false;  // time limit
};

class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  Eigen::VectorXd reset(Rng& rng) {
    steps_ = 0;
    state_ = initial_state(rng);
    return state_;
  }

  StepResult step(const Eigen::VectorXd& action, Rng& rng) {
    if (action.size() != spec().action_dim) throw environment_error(name() + ": action dimension mismatch");
    if (!action.allFinite()) throw environment_error(name() + ": non-finite action");
    if (state_.size() == 0) throw environment_error(name() + ": step before reset");
    StepResult r = transition(state_, action, rng);
    ++steps_;
    r.truncated = !r.terminal && steps_ >= spec().max_episode_steps;
    state_ = r.next_state;
    return r;
  }

  /// Starts an episode from a given state instead of the initial distribution.
  void reset_to(const Eigen::VectorXd& state) {
    if (state.size() != spec().state_dim) throw environment_error(name() + ": state dimension mismatch");
    steps_ = 0;
    state_ = state;
  }

  const Eigen::VectorXd& state() const { return state_; }
  int steps_taken() const { return steps_; }

  Eigen::VectorXd clip_action(const Eigen::VectorXd& a) const {
    return a.cwiseMax(spec().action_low).cwiseMin(spec().action_high);
  }

 protected:
  virtual Eigen::VectorXd initial_state(Rng& rng) = 0;
  virtual StepResult transition(const Eigen::VectorXd& s, const Eigen::VectorXd& u, Rng& rng) = 0;

 private:
  Eigen::VectorXd state_;
  int steps_ = 0;
};

/// Discrete-time double integrator, dt = 0.1:
///   x' = A x + B u + w,  A = [[1, dt], [0, 1]],  B = [dt^2/2, dt]^T,
///   w ~ N(0, noise^2 I),  r = -x^T Q x - u^T R u,  Q = I, R = 0.1.
/// The state is clipped to [-10, 10]^2, so r >= -(200 + 0.1 * 36).
/// Start uniform in [-1, 1]^2; 50 steps per episode; u in [-6, 6].
class LqrEnv final : public Env {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kStateLimit = 10.0;

  explicit LqrEnv(double noise = 0.01) : noise_(noise) {
    spec_.state_dim = 2;
    spec_.action_dim = 1;
    spec_.action_low = Eigen::VectorXd::Constant(1, -6.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 6.0);
    spec_.max_episode_steps = 50;
    spec_.reward_min = -(2 * kStateLimit * kStateLimit + 0.1 * 36.0);
    spec_.reward_max = 0.0;
  }

  static Eigen::Matrix2d a_matrix() { return (Eigen::Matrix2d() << 1.0, kDt, 0.0, 1.0).finished(); }
  static Eigen::Vector2d b_matrix() { return {0.5 * kDt * kDt, kDt}; }
  static Eigen::Matrix2d q_matrix() { return Eigen::Matrix2d::Identity(); }
  static Eigen::Matrix<double, 1, 1> r_matrix() { return Eigen::Matrix<double, 1, 1>::Constant(0.1); }

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "lqr2"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<LqrEnv>(*this); }
  double noise() const { return noise_; }

 protected:
  Eigen::VectorXd initial_state(Rng& rng) override {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(2);
    x[0] = u(rng);
    x[1] = u(rng);
    return x;
  }

  StepResult transition(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Rng& rng) override {
    StepResult r;
    r.reward = -x.squaredNorm() - 0.1 * u.squaredNorm();
    Eigen::VectorXd next = a_matrix() * x + b_matrix() * u[0];
    if (noise_ > 0.0) {
      std::normal_distribution<double> w(0.0, noise_);
      next[0] += w(rng);
      next[1] += w(rng);
    }
    r.next_state = next.cwiseMax(-kStateLimit).cwiseMin(kStateLimit);
    return r;
  }

 private:
  EnvSpec spec_;
  double noise_;
};

/// Planar point mass steered to the origin, dt = 0.1:
///   p' = p + v dt + u dt^2 / 2,  v' = v + u dt,  u in [-1, 1]^2,
///   r = -|p| - 0.01 |u|^2, terminal once |p'| < 0.1.
/// Position is clipped to [-5, 5], velocity to [-2, 2]; start p uniform in
/// [-1, 1]^2 with v = 0; 100 steps per episode. State = (p, v).
class PointMassEnv final : public Env {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kGoalRadius = 0.1;

  PointMassEnv() {
    spec_.state_dim = 4;
    spec_.action_dim = 2;
    spec_.action_low = Eigen::VectorXd::Constant(2, -1.0);
    spec_.action_high = Eigen::VectorXd::Constant(2, 1.0);
    spec_.max_episode_steps = 100;
    spec_.reward_min = -(5.0 * std::numbers::sqrt2 + 0.02);
    spec_.reward_max = 0.0;
  }

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "pointmass"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }

 protected:
  Eigen::VectorXd initial_state(Rng& rng) override {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x[0] = u(rng);
    x[1] = u(rng);
    return x;
  }

  StepResult transition(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Rng&) override {
    StepResult r;
    const Eigen::Vector2d p = x.head<2>();
    const Eigen::Vector2d v = x.tail<2>();
    r.reward = -p.norm() - 0.01 * u.squaredNorm();
    Eigen::Vector2d p_next = (p + v * kDt + 0.5 * kDt * kDt * u).cwiseMax(-5.0).cwiseMin(5.0);
    Eigen::Vector2d v_next = (v + u * kDt).cwiseMax(-2.0).cwiseMin(2.0);
    r.next_state.resize(4);
    r.next_state << p_next, v_next;
    r.terminal = p_next.norm() < kGoalRadius;
    return r;
  }

 private:
  EnvSpec spec_;
};

/// Torque-limited pendulum swing-up (g = 10, m = l = 1, dt = 0.05):
///   w' = clip(w + (3g/(2l) sin th + 3/(m l^2) u) dt, -8, 8),  th' = th + w' dt,
///   r = -(angle(th)^2 + 0.1 w^2 + 0.001 u^2), u in [-2, 2].
/// State = (cos th, sin th, w); th = 0 is upright. Start th uniform in
/// [-pi, pi], w uniform in [-1, 1]; 200 steps per episode.
class PendulumEnv final : public Env {
 public:
  PendulumEnv() {
    spec_.state_dim = 3;
    spec_.action_dim = 1;
    spec_.action_low = Eigen::VectorXd::Constant(1, -2.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 2.0);
    spec_.max_episode_steps = 200;
    spec_.reward_min = -(std::numbers::pi * std::numbers::pi + 0.1 * 64.0 + 0.001 * 4.0);
    spec_.reward_max = 0.0;
  }

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "pendulum1"; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PendulumEnv>(*this); }

  static double wrap_angle(double th) {
    return std::remainder(th, 2.0 * std::numbers::pi);
  }

 protected:
  Eigen::VectorXd initial_state(Rng& rng) override {
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> speed(-1.0, 1.0);
    theta_ = angle(rng);
    omega_ = speed(rng);
    return observe();
  }

  StepResult transition(const Eigen::VectorXd&, const Eigen::VectorXd& u, Rng&) override {
    constexpr double g = 10.0, m = 1.0, l = 1.0, dt = 0.05;
    StepResult r;
    const double th = wrap_angle(theta_);
    r.reward = -(th * th + 0.1 * omega_ * omega_ + 0.001 * u[0] * u[0]);
    omega_ = std::clamp(omega_ + (3.0 * g / (2.0 * l) * std::sin(theta_) + 3.0 / (m * l * l) * u[0]) * dt, -8.0, 8.0);
    theta_ = theta_ + omega_ * dt;
    r.next_state = observe();
    return r;
  }

 private:
  Eigen::VectorXd observe() const {
    Eigen::VectorXd x(3);
    x << std::cos(theta_), std::sin(theta_), omega_;
    return x;
  }

  EnvSpec spec_;
  double theta_ = 0.0;
  double omega_ = 0.0;
};

inline std::vector<std::string> env_names() { return {"lqr2", "pointmass", "pendulum1"}; }

inline std::unique_ptr<Env> make_env(const std::string& name, double noise = 0.01) {
  if (name == "lqr2") return std::make_unique<LqrEnv>(noise);
  if (name == "pointmass") return std::make_unique<PointMassEnv>();
  if (name == "pendulum1") return std::make_unique<PendulumEnv>();
  throw config_error("unknown environment '" + name + "' (expected lqr2, pointmass or pendulum1)");
}

struct RiccatiSolution {
  Eigen::MatrixXd cost_to_go;  // P
  Eigen::MatrixXd gain;        // K, u = -K x
  int iterations = 0;
};

/// Discounted infinite-horizon LQR by fixed-point iteration of
///   P = Q + K^T R K + g (A - B K)^T P (A - B K),  K = g (R + g B^T P B)^{-1} B^T P A.
inline RiccatiSolution solve_discounted_riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                                const Eigen::MatrixXd& q, const Eigen::MatrixXd& r, double gamma,
                                                double tolerance = 1e-13, int max_iterations = 100000) {
  RiccatiSolution sol;
  Eigen::MatrixXd p = q;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd k = gamma * (r + gamma * b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    const Eigen::MatrixXd closed = a - b * k;
    Eigen::MatrixXd next = q + k.transpose() * r * k + gamma * closed.transpose() * p * closed;
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    sol.gain = k;
    sol.iterations = it;
    if (change < tolerance * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  sol.cost_to_go = p;
  return sol;
}

inline RiccatiSolution lqr2_riccati(double gamma) {
  return solve_discounted_riccati(LqrEnv::a_matrix(), LqrEnv::b_matrix(), LqrEnv::q_matrix(), LqrEnv::r_matrix(),
                                  gamma);
}

/// Undiscounted finite-horizon LQR by the backward Riccati recursion
///   P_T = 0,  K_t = (R + B^T P_{t+1} B)^{-1} B^T P_{t+1} A,  P_t = Q + K_t^T R K_t + (A - B K_t)^T P_{t+1} (A - B K_t).
/// gains[t] is the feedback at step t; this maximises the expected episode
/// return that evaluation reports.
struct FiniteHorizonLqr {
  std::vector<Eigen::MatrixXd> gains;
  std::vector<Eigen::MatrixXd> cost_to_go;  // P_0 .. P_T
};

inline FiniteHorizonLqr solve_finite_horizon_riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                                     const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                                                     int horizon) {
  FiniteHorizonLqr sol;
  sol.gains.resize(static_cast<std::size_t>(horizon));
  sol.cost_to_go.resize(static_cast<std::size_t>(horizon) + 1);
  sol.cost_to_go.back() = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::MatrixXd& p = sol.cost_to_go[static_cast<std::size_t>(t) + 1];
    const Eigen::MatrixXd k = (r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    const Eigen::MatrixXd closed = a - b * k;
    sol.gains[static_cast<std::size_t>(t)] = k;
    sol.cost_to_go[static_cast<std::size_t>(t)] = q + k.transpose() * r * k + closed.transpose() * p * closed;
  }
  return sol;
}

inline FiniteHorizonLqr lqr2_finite_horizon() {
  return solve_finite_horizon_riccati(LqrEnv::a_matrix(), LqrEnv::b_matrix(), LqrEnv::q_matrix(),
                                      LqrEnv::r_matrix(), LqrEnv().spec().max_episode_steps);
}

}  // namespace acerax
