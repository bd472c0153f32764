#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "acerax/errors.hpp"
#include "acerax/nn.hpp"

namespace acerax {

enum class Direction { ascent, descent };

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(Eigen::Index n, double step_size)
      : first_moment(Eigen::VectorXd::Zero(n)), second_moment(Eigen::VectorXd::Zero(n)), step_size(step_size) {}
};

/// One bias-corrected ADAM update. Ascent adds the step, descent subtracts it.
inline void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const FlatGradient& grad,
                      Direction direction) {
  detail::require_shape(params.size() == grad.size() && state.first_moment.size() == grad.size() &&
                            state.second_moment.size() == grad.size(),
                        "adam: parameter, gradient and moment lengths differ");
  ++state.step;
  const auto& g = grad.values.array();
  state.first_moment = state.beta1 * state.first_moment.array() + (1.0 - state.beta1) * g;
  state.second_moment = state.beta2 * state.second_moment.array() + (1.0 - state.beta2) * g.square();
  const double t = static_cast<double>(state.step);
  const double m_corr = 1.0 - std::pow(state.beta1, t);
  const double v_corr = 1.0 - std::pow(state.beta2, t);
  const double sign = direction == Direction::ascent ? 1.0 : -1.0;
  params.array() += sign * state.step_size * (state.first_moment.array() / m_corr) /
                    ((state.second_moment.array() / v_corr).sqrt() + state.epsilon);
}

}  // namespace acerax
