#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "acerax/config.hpp"
#include "acerax/errors.hpp"
#include "acerax/gaussian_policy.hpp"
#include "acerax/nn.hpp"
#include "acerax/replay.hpp"

namespace acerax {

/// Soft truncation b tanh(z / b): odd, increasing, |psi| < b, slope 1 at 0.
/// Soft truncation b tanh(z / b). tanh rounds to +-1 for |z| / b beyond ~19;
/// the result is then kept one ulp inside the bound, which is strict.
inline double psi(double z, double b) {
  const double v = b * std::tanh(z / b);
  return std::abs(v) < b ? v : std::copysign(std::nextafter(b, 0.0), z);
}

inline double truncate_ratio(double z, double b, bool hard) { return hard ? std::min(z, b) : psi(z, b); }

/**
 * Truncated-ratio n-step temporal difference of a window of length L:
 *
 *   e = sum_{k<L} gamma^k (r_k + gamma V_{k+1} - V_k) psi_b(prod_{j<=k} rho_j)
 *
 * `values` holds V at the L window states followed by the bootstrap state;
 * the bootstrap is replaced by zero when the window ends in a terminal state.
 * `log_ratios` holds ln rho_j; the product is accumulated in log space.
 */
inline double temporal_difference(const Window& w, const Eigen::Ref<const Eigen::VectorXd>& values,
                                  const Eigen::Ref<const Eigen::VectorXd>& log_ratios, double gamma, double b,
                                  bool hard_truncation = false) {
  const auto L = static_cast<Eigen::Index>(w.length());
  detail::require_shape(values.size() == L + 1 && log_ratios.size() == L, "temporal_difference: window size mismatch");
  double e = 0.0;
  double discount = 1.0;
  double log_product = 0.0;
  for (Eigen::Index k = 0; k < L; ++k) {
    const double next_value = (k + 1 == L && w.terminal) ? 0.0 : values[k + 1];
    const double delta = w.steps[static_cast<std::size_t>(k)]->r + gamma * next_value - values[k];
    log_product += log_ratios[k];
    e += discount * delta * truncate_ratio(std::exp(log_product), b, hard_truncation);
    discount *= gamma;
  }
  return e;
}

/// ln(current density / stored density) of a stored action.
template <typename A, typename B>
double log_density_ratio(const Eigen::MatrixBase<A>& mu, const Eigen::MatrixBase<B>& eta, const Transition& t) {
  if (!(t.phi > 0.0)) throw corrupt_buffer_error("stored behaviour density must be positive");
  return log_density(mu, eta, t.a) - std::log(t.phi);
}

/// States s_i .. s_{i+L-1} as columns.
inline Eigen::MatrixXd window_states(const Window& w) {
  Eigen::MatrixXd s(w.first().s.size(), static_cast<Eigen::Index>(w.length()));
  for (std::size_t k = 0; k < w.length(); ++k) s.col(static_cast<Eigen::Index>(k)) = w.steps[k]->s;
  return s;
}

/// Temporal difference of one window under the current policy and critic.
inline double temporal_difference(const Window& w, const PolicyParams& params, const DenseNet& critic,
                                  const Config& config) {
  const Eigen::MatrixXd states = window_states(w);
  const auto L = states.cols();
  Eigen::MatrixXd value_states(states.rows(), L + 1);
  value_states << states, w.final_state();
  const Eigen::MatrixXd mu = params.mu_net.forward_batch(states);
  Eigen::MatrixXd eta = params.eta_net.forward_batch(states);
  clamp_eta(eta);
  const Eigen::VectorXd values = critic.forward_batch(value_states).row(0).transpose();
  Eigen::VectorXd log_ratios(L);
  for (Eigen::Index k = 0; k < L; ++k)
    log_ratios[k] = log_density_ratio(mu.col(k), eta.col(k), *w.steps[static_cast<std::size_t>(k)]);
  return temporal_difference(w, values, log_ratios, config.gamma, config.b, config.hard_truncation);
}

}  // namespace acerax
