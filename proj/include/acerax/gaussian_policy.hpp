#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "acerax/errors.hpp"
#include "acerax/nn.hpp"

namespace acerax {

// Numerical guard on log-std before exponentiation. Training runs assert that
// it never engages.
inline constexpr double kEtaMin = -10.0;
inline constexpr double kEtaMax = 4.0;

inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

/// Diagonal normal action distribution: mean mu, log standard deviation eta.
struct GaussianHead {
  Eigen::VectorXd mu;
  Eigen::VectorXd eta;
  bool eta_clamped = false;

  Eigen::Index dim() const { return mu.size(); }
  Eigen::VectorXd sigma() const { return eta.array().exp().matrix(); }
  const Eigen::VectorXd& mode() const { return mu; }
};

struct PolicyParams {
  DenseNet mu_net;   // mean
  DenseNet eta_net;  // log standard deviation

  int state_dim() const { return mu_net.input_size(); }
  int action_dim() const { return mu_net.output_size(); }

  void validate() const {
    detail::require_shape(mu_net.input_size() == eta_net.input_size(), "policy nets disagree on state dimension");
    detail::require_shape(mu_net.output_size() == eta_net.output_size(), "policy nets disagree on action dimension");
  }
};

/// Clamps every column of a log-std matrix into [kEtaMin, kEtaMax]; returns
/// the number of clamped entries.
template <typename Derived>
Eigen::Index clamp_eta(Eigen::MatrixBase<Derived>& eta) {
  Eigen::Index hits = 0;
  for (Eigen::Index j = 0; j < eta.cols(); ++j)
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
      const double v = eta(i, j);
      if (v < kEtaMin || v > kEtaMax) {
        eta(i, j) = std::clamp(v, kEtaMin, kEtaMax);
        ++hits;
      }
    }
  return hits;
}

inline GaussianHead head(const PolicyParams& params, const Eigen::VectorXd& s) {
  detail::require_shape(s.size() == params.state_dim(), "state dimension mismatch");
  GaussianHead h{params.mu_net.forward(s), params.eta_net.forward(s)};
  h.eta_clamped = clamp_eta(h.eta) > 0;
  return h;
}

inline Eigen::VectorXd standard_normal(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(d);
  for (Eigen::Index j = 0; j < d; ++j) xi[j] = normal(rng);
  return xi;
}

/// a = mu + xi * exp(eta), elementwise.
inline Eigen::VectorXd sample(const GaussianHead& h, const Eigen::VectorXd& xi) {
  detail::require_shape(xi.size() == h.dim(), "noise dimension mismatch");
  return h.mu + (xi.array() * h.eta.array().exp()).matrix();
}

/// Log-density from raw columns; shared by the batched replay path.
template <typename A, typename B, typename C>
double log_density(const Eigen::MatrixBase<A>& mu, const Eigen::MatrixBase<B>& eta, const Eigen::MatrixBase<C>& a) {
  const auto diff = (a - mu).array();
  const double quad = (diff.square() * (-2.0 * eta.array()).exp()).sum();
  return -eta.sum() - 0.5 * quad - static_cast<double>(mu.size()) * kHalfLog2Pi;
}

inline double log_density(const GaussianHead& h, const Eigen::VectorXd& a) {
  detail::require_shape(a.size() == h.dim(), "action dimension mismatch");
  return log_density(h.mu, h.eta, a);
}

/// Current density of `a` over the density recorded when it was taken.
inline double density_ratio(const GaussianHead& current, const Eigen::VectorXd& a, double stored_phi) {
  if (!(stored_phi > 0.0)) throw corrupt_buffer_error("stored behaviour density must be positive");
  return std::exp(log_density(current, a) - std::log(stored_phi));
}

/// d log phi / d mu for a diagonal normal.
template <typename A, typename B, typename C>
Eigen::VectorXd log_density_mu_gradient(const Eigen::MatrixBase<A>& mu, const Eigen::MatrixBase<B>& eta,
                                        const Eigen::MatrixBase<C>& a) {
  return ((a - mu).array() * (-2.0 * eta.array()).exp()).matrix();
}

/// Gradient of log phi(a; mu(s), eta(s)) with respect to the mean network's
/// parameters; the log-std network is held fixed.
inline FlatGradient actor_grad_logdensity(const PolicyParams& params, const Eigen::VectorXd& s,
                                          const Eigen::VectorXd& a) {
  const GaussianHead h = head(params, s);
  detail::require_shape(a.size() == h.dim(), "action dimension mismatch");
  return params.mu_net.backward(s, log_density_mu_gradient(h.mu, h.eta, a));
}

}  // namespace acerax
