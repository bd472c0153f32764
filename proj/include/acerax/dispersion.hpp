#pragma once

#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "acerax/errors.hpp"
#include "acerax/gaussian_policy.hpp"
#include "acerax/nn.hpp"

namespace acerax {

/// One replayed event as seen by the dispersion loss: state, stored action,
/// stored mode of the behaviour distribution.
struct DispersionSample {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  Eigen::VectorXd m;
};

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0)) throw config_error("dispersion weight alpha must be non-negative");
}

/**
 * -ln phi(m) - alpha ln phi(a) without its eta-independent constant
 * (1 + alpha) (d/2) ln 2pi:
 *
 *   sum_j  1/2 (m_j - mu_j)^2 e^{-2 eta_j} + alpha/2 (a_j - mu_j)^2 e^{-2 eta_j} + (1 + alpha) eta_j
 */
template <typename A, typename B, typename C, typename D>
double dispersion_loss(const Eigen::MatrixBase<A>& mu, const Eigen::MatrixBase<B>& eta, const Eigen::MatrixBase<C>& a,
                       const Eigen::MatrixBase<D>& m, double alpha) {
  const auto inv_var = (-2.0 * eta.array()).exp();
  return (0.5 * (m - mu).array().square() * inv_var + 0.5 * alpha * (a - mu).array().square() * inv_var +
          (1.0 + alpha) * eta.array())
      .sum();
}

/// d loss / d eta_j = -[(m_j - mu_j)^2 + alpha (a_j - mu_j)^2] e^{-2 eta_j} + (1 + alpha)
template <typename A, typename B, typename C, typename D>
Eigen::VectorXd dispersion_eta_gradient(const Eigen::MatrixBase<A>& mu, const Eigen::MatrixBase<B>& eta,
                                        const Eigen::MatrixBase<C>& a, const Eigen::MatrixBase<D>& m, double alpha) {
  const auto spread = (m - mu).array().square() + alpha * (a - mu).array().square();
  return (-spread * (-2.0 * eta.array()).exp() + (1.0 + alpha)).matrix();
}

inline double dispersion_loss(const PolicyParams& params, const DispersionSample& sample, double alpha) {
  check_alpha(alpha);
  const GaussianHead h = head(params, sample.s);
  detail::require_shape(sample.a.size() == h.dim() && sample.m.size() == h.dim(), "dispersion sample dimension mismatch");
  return dispersion_loss(h.mu, h.eta, sample.a, sample.m, alpha);
}

/// Gradient of the dispersion loss with respect to the log-std network only.
inline FlatGradient dispersion_grad(const PolicyParams& params, const DispersionSample& sample, double alpha) {
  check_alpha(alpha);
  const GaussianHead h = head(params, sample.s);
  detail::require_shape(sample.a.size() == h.dim() && sample.m.size() == h.dim(), "dispersion sample dimension mismatch");
  return params.eta_net.backward(sample.s, dispersion_eta_gradient(h.mu, h.eta, sample.a, sample.m, alpha));
}

/// A stored action and mode together with the mean they are compared to.
struct FixedMeanSample {
  Eigen::VectorXd a;
  Eigen::VectorXd m;
  Eigen::VectorXd mu;
};

struct StationarySigma {
  Eigen::VectorXd sigma;
  bool degenerate = false;  // some dimension has zero spread, so sigma* = 0
};

/// Minimiser of the batch-mean dispersion loss over a state-independent eta:
/// sigma*_j^2 = mean_i[(m_ij - mu_ij)^2 + alpha (a_ij - mu_ij)^2] / (1 + alpha).
inline StationarySigma closed_form_sigma(std::span<const FixedMeanSample> samples, double alpha) {
  check_alpha(alpha);
  if (samples.empty()) throw std::invalid_argument("closed_form_sigma: empty batch");
  const Eigen::Index d = samples.front().mu.size();
  Eigen::VectorXd spread = Eigen::VectorXd::Zero(d);
  for (const auto& x : samples) {
    detail::require_shape(x.a.size() == d && x.m.size() == d && x.mu.size() == d, "closed_form_sigma: dimension mismatch");
    spread.array() += (x.m - x.mu).array().square() + alpha * (x.a - x.mu).array().square();
  }
  spread /= static_cast<double>(samples.size()) * (1.0 + alpha);
  StationarySigma out{spread.array().sqrt().matrix(), (spread.array() <= 0.0).any()};
  return out;
}

}  // namespace acerax
