#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "acerax/agent.hpp"
#include "acerax/config.hpp"
#include "acerax/dispersion.hpp"
#include "acerax/gradcheck.hpp"
#include "acerax/synthetic.hpp"
#include "acerax/td.hpp"
#include "acerax/training.hpp"

namespace acerax {

struct GradientSuiteOptions {
  int draws = 100;
  int minibatch = 8;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  double step = 1e-6;
  // Test hook: lets a caller corrupt an analytic gradient before comparison.
  std::function<void(std::string_view loss, FlatGradient&)> tamper;
};

struct LossCheck {
  std::string name;
  GradCheckReport worst;
  int worst_draw = -1;
};

struct GradientSuiteReport {
  std::vector<LossCheck> losses;  // critic, actor, dispersion
  bool passed = true;
};

namespace detail {

/// Copy of a network in extended precision that re-evaluates the output
/// after shifting one pre-activation, reusing the unperturbed trace.
class ExtendedNet {
 public:
  using Vec = std::vector<long double>;

  struct Trace {
    std::vector<Vec> inputs;  // inputs[l] feeds layer l
    std::vector<Vec> pre;     // pre-activations of layer l
    Vec output;
  };

  explicit ExtendedNet(const DenseNet& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto w = net.weights(l);
      const auto b = net.bias(l);
      std::vector<Vec> rows(static_cast<std::size_t>(w.rows()), Vec(static_cast<std::size_t>(w.cols())));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) rows[i][j] = w(i, j);
      w_.push_back(std::move(rows));
      b_.emplace_back(b.data(), b.data() + b.size());
    }
  }

  std::size_t layer_count() const { return w_.size(); }

  Trace trace(const Eigen::VectorXd& x) const {
    Trace t;
    Vec h(x.data(), x.data() + x.size());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      t.inputs.push_back(h);
      Vec z = affine(l, h);
      t.pre.push_back(z);
      h = activate(l, z);
    }
    t.output = h;
    return t;
  }

  /// Output when pre-activation (l, i) is moved by dz.
  Vec output_with(const Trace& t, std::size_t l, std::size_t i, long double dz) const {
    Vec z = t.pre[l];
    z[i] += dz;
    if (l + 1 == layer_count()) return z;
    const long double dh = activate_one(l, z[i]) - t.inputs[l + 1][i];
    z = t.pre[l + 1];
    Vec h;
    for (std::size_t r = 0; r < z.size(); ++r) z[r] += w_[l + 1][r][i] * dh;
    h = activate(l + 1, std::move(z));
    for (std::size_t k = l + 2; k < layer_count(); ++k) h = activate(k, affine(k, h));
    return h;
  }

 private:
  Vec affine(std::size_t l, const Vec& h) const {
    Vec z = b_[l];
    for (std::size_t i = 0; i < z.size(); ++i)
      for (std::size_t j = 0; j < h.size(); ++j) z[i] += w_[l][i][j] * h[j];
    return z;
  }
  long double activate_one(std::size_t l, long double z) const { return l + 1 < layer_count() ? std::tanh(z) : z; }
  Vec activate(std::size_t l, Vec z) const {
    for (auto& v : z) v = activate_one(l, v);
    return z;
  }

  std::vector<std::vector<Vec>> w_;
  std::vector<Vec> b_;
};

/// Central differences of  mean_w f_w(net(x_w))  over every parameter of
/// `net`, evaluated in extended precision so that rounding in the loss stays
/// far below the tolerance even for near-zero coordinates.
template <typename OutputLoss>
GradCheckReport extended_finite_diff(const DenseNet& net, const std::vector<Eigen::VectorXd>& inputs,
                                     const OutputLoss& loss, const Eigen::VectorXd& analytic, double tolerance,
                                     double step) {
  require_shape(analytic.size() == net.parameter_count(), "gradcheck: gradient length mismatch");
  const ExtendedNet ext(net);
  std::vector<ExtendedNet::Trace> traces;
  for (const auto& x : inputs) traces.push_back(ext.trace(x));
  const long double inv = 1.0L / static_cast<long double>(inputs.size());

  GradCheckReport report;
  report.coordinates = net.parameter_count();
  Eigen::Index index = 0;
  auto check = [&](double param, std::size_t l, std::size_t i, std::optional<std::size_t> j) {
    // the probe points as the 64-bit parameters would hold them
    const long double up_shift = static_cast<long double>(param + step) - param;
    const long double down_shift = static_cast<long double>(param - step) - param;
    long double up = 0.0L, down = 0.0L;
    for (std::size_t w = 0; w < traces.size(); ++w) {
      const long double scale = j ? traces[w].inputs[l][*j] : 1.0L;
      up += loss(w, ext.output_with(traces[w], l, i, up_shift * scale));
      down += loss(w, ext.output_with(traces[w], l, i, down_shift * scale));
    }
    const double numeric = static_cast<double>((up - down) * inv / (up_shift - down_shift));
    const double err = relative_error(analytic[index], numeric);
    if (err > report.max_relative_error || report.worst_index < 0) {
      report.max_relative_error = err;
      report.worst_index = index;
      report.analytic_at_worst = analytic[index];
      report.numeric_at_worst = numeric;
    }
    ++index;
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weights(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        check(w(i, j), l, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    const auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) check(b[i], l, static_cast<std::size_t>(i), std::nullopt);
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

inline long double clamp_eta_ext(long double eta) {
  return std::clamp<long double>(eta, kEtaMin, kEtaMax);
}

}  // namespace detail

/**
 * Central-difference check of the three replay gradient estimates, taken from
 * the batched training path, at random parameters and synthetic windows:
 *
 *   critic:     mean_w e_w V(s_w; nu)                       over nu
 *   actor:      mean_w [e_w ln phi(a_w) - p(mu(s_w))]        over theta_mu
 *   dispersion: mean_w l_w                                   over theta_eta
 *
 * with each e_w frozen at its value for the current parameters. The analytic
 * side runs in double; the differences are taken in long double.
 */
inline GradientSuiteReport gradient_suite(Config config, int state_dim, int action_dim,
                                          const GradientSuiteOptions& options = {}) {
  config.mode = ExplorationMode::adaptive;
  config.validate();
  EnvSpec spec;
  spec.state_dim = state_dim;
  spec.action_dim = action_dim;
  spec.action_low = Eigen::VectorXd::Constant(action_dim, -1.0);
  spec.action_high = Eigen::VectorXd::Constant(action_dim, 1.0);

  GradientSuiteReport report;
  report.losses = {{"critic", {}, -1}, {"actor", {}, -1}, {"dispersion", {}, -1}};
  Rng rng = derive_rng(options.seed, 7);
  for (int draw = 0; draw < options.draws; ++draw) {
    Learner learner = make_learner(config, spec, rng);
    learner.policy = perturbed(learner.policy, 0.1, rng);
    learner.critic = perturbed(learner.critic, 0.1, rng);
    const PolicyParams behaviour = perturbed(learner.policy, 0.05, rng);
    const ReplayBuffer buffer =
        synthetic_buffer(behaviour, static_cast<std::size_t>(4 * config.n + options.minibatch), 0.05, rng);

    std::vector<Window> windows;
    for (int k = 0; k < options.minibatch; ++k) windows.push_back(*buffer.sample_window(config.n, rng));
    std::vector<double> e;
    std::vector<Eigen::VectorXd> states;
    std::vector<GaussianHead> heads;
    for (const auto& w : windows) {
      e.push_back(temporal_difference(w, learner.policy, learner.critic, config));
      states.push_back(w.first().s);
      heads.push_back(head(learner.policy, w.first().s));
    }

    ReplayGradients g = replay_gradients(windows, learner, config);
    if (options.tamper) {
      options.tamper("critic", g.critic);
      options.tamper("actor", g.mu);
      options.tamper("dispersion", g.eta);
    }

    using Vec = detail::ExtendedNet::Vec;
    const double coeff = config.penalty_coeff;
    const long double alpha = config.alpha;
    auto critic_loss = [&](std::size_t w, const Vec& v) { return static_cast<long double>(e[w]) * v[0]; };
    auto actor_loss = [&](std::size_t w, const Vec& mu) {
      const Transition& t = windows[w].first();
      long double log_phi = 0.0L, penalty = 0.0L;
      for (std::size_t j = 0; j < mu.size(); ++j) {
        const long double eta = heads[w].eta[static_cast<Eigen::Index>(j)];
        const long double d = t.a[static_cast<Eigen::Index>(j)] - mu[j];
        log_phi -= eta + d * d * std::exp(-2.0L * eta) / 2.0L + static_cast<long double>(kHalfLog2Pi);
        const long double above = std::max<long double>(0.0L, mu[j] - learner.box.high[static_cast<Eigen::Index>(j)]);
        const long double below = std::max<long double>(0.0L, learner.box.low[static_cast<Eigen::Index>(j)] - mu[j]);
        penalty += coeff * (above * above + below * below);
      }
      return static_cast<long double>(e[w]) * log_phi - penalty;
    };
    auto dispersion = [&](std::size_t w, const Vec& raw_eta) {
      const Transition& t = windows[w].first();
      long double l = 0.0L;
      for (std::size_t j = 0; j < raw_eta.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const long double eta = detail::clamp_eta_ext(raw_eta[j]);
        const long double dm = t.m[jj] - heads[w].mu[jj];
        const long double da = t.a[jj] - heads[w].mu[jj];
        l += (dm * dm + alpha * da * da) * std::exp(-2.0L * eta) / 2.0L + (1.0L + alpha) * eta;
      }
      return l;
    };

    const GradCheckReport checks[] = {
        detail::extended_finite_diff(learner.critic, states, critic_loss, g.critic.values, options.tolerance,
                                     options.step),
        detail::extended_finite_diff(learner.policy.mu_net, states, actor_loss, g.mu.values, options.tolerance,
                                     options.step),
        detail::extended_finite_diff(learner.policy.eta_net, states, dispersion, g.eta.values, options.tolerance,
                                     options.step),
    };
    for (std::size_t k = 0; k < 3; ++k) {
      LossCheck& lc = report.losses[k];
      if (lc.worst_draw < 0 || checks[k].max_relative_error > lc.worst.max_relative_error) {
        lc.worst = checks[k];
        lc.worst_draw = draw;
      }
    }
  }
  for (const auto& lc : report.losses) report.passed = report.passed && lc.worst.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace acerax
