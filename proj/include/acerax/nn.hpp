#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "acerax/errors.hpp"

namespace acerax {

using Rng = std::mt19937_64;

namespace detail {

// tanh(z) = 1 - 2 / (e^{2z} + 1). Uses Eigen's vectorised exp; absolute
// error stays at rounding level and the limits +-1 are exact.
template <typename Derived>
Eigen::MatrixXd tanh_activation(const Eigen::MatrixBase<Derived>& z) {
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

}  // namespace detail

/// Gradient of a scalar with respect to a network's parameters, laid out in
/// the same order as DenseNet::params().
struct FlatGradient {
  Eigen::VectorXd values;

  FlatGradient() = default;
  explicit FlatGradient(Eigen::Index n) : values(Eigen::VectorXd::Zero(n)) {}
  explicit FlatGradient(Eigen::VectorXd v) : values(std::move(v)) {}

  Eigen::Index size() const { return values.size(); }

  FlatGradient& operator+=(const FlatGradient& other) {
    detail::require_shape(other.size() == size(), "gradient length mismatch");
    values += other.values;
    return *this;
  }
  FlatGradient& operator*=(double k) {
    values *= k;
    return *this;
  }
};

/**
 * Feed-forward network: tanh on hidden layers, identity on the output layer.
 *
 * All weights and biases live in one flat vector. Layer l (fan_in -> fan_out)
 * occupies a fan_out x fan_in column-major weight block followed by its
 * fan_out biases; layers follow in order. Samples are columns in the batched
 * entry points.
 */
class DenseNet {
 public:
  DenseNet() = default;

  /// Network with every parameter set to zero.
  explicit DenseNet(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw shape_error("a network needs at least input and output sizes");
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw shape_error("layer sizes must be positive");
      offsets_.push_back(offset);
      offset += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(offset);
  }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static DenseNet glorot(std::vector<int> layer_sizes, Rng& rng) {
    DenseNet net(std::move(layer_sizes));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const double limit = std::sqrt(6.0 / (net.fan_in(l) + net.fan_out(l)));
      std::uniform_real_distribution<double> dist(-limit, limit);
      auto w = net.weights(l);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
    return net;
  }

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t layer_count() const { return offsets_.size(); }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int fan_in(std::size_t l) const { return sizes_[l]; }
  int fan_out(std::size_t l) const { return sizes_[l + 1]; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weights(std::size_t l) {
    return {params_.data() + offsets_[l], fan_out(l), fan_in(l)};
  }
  Eigen::Map<const Eigen::MatrixXd> weights(std::size_t l) const {
    return {params_.data() + offsets_[l], fan_out(l), fan_in(l)};
  }
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + Eigen::Index{fan_out(l)} * fan_in(l), fan_out(l)};
  }
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + Eigen::Index{fan_out(l)} * fan_in(l), fan_out(l)};
  }

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
    detail::require_shape(inputs.rows() == input_size(),
                          "input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                              std::to_string(input_size()));
    Eigen::MatrixXd h = inputs;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      Eigen::MatrixXd z = weights(l) * h;
      z.colwise() += bias(l);
      if (l + 1 < layer_count()) z = detail::tanh_activation(z);
      h = std::move(z);
    }
    return h;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const { return forward_batch(x); }

  /// Gradient of sum_c output_grads.col(c) . forward(inputs.col(c)) with
  /// respect to the parameters.
  FlatGradient backward_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grads) const {
    detail::require_shape(inputs.rows() == input_size(), "input dimension mismatch in backward");
    detail::require_shape(output_grads.rows() == output_size() && output_grads.cols() == inputs.cols(),
                          "output gradient shape mismatch in backward");

    // activations[l] is the input to layer l
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(layer_count());
    activations.push_back(inputs);
    for (std::size_t l = 0; l + 1 < layer_count(); ++l) {
      Eigen::MatrixXd z = weights(l) * activations.back();
      z.colwise() += bias(l);
      activations.push_back(detail::tanh_activation(z));
    }

    FlatGradient grad(parameter_count());
    Eigen::MatrixXd delta = output_grads;
    for (std::size_t l = layer_count(); l-- > 0;) {
      const Eigen::Index w_size = Eigen::Index{fan_out(l)} * fan_in(l);
      Eigen::Map<Eigen::MatrixXd> gw(grad.values.data() + offsets_[l], fan_out(l), fan_in(l));
      Eigen::Map<Eigen::VectorXd> gb(grad.values.data() + offsets_[l] + w_size, fan_out(l));
      gw.noalias() = delta * activations[l].transpose();
      gb = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = weights(l).transpose() * delta;
        delta = (back.array() * (1.0 - activations[l].array().square())).matrix();
      }
    }
    return grad;
  }

  FlatGradient backward(const Eigen::VectorXd& x, const Eigen::VectorXd& output_grad) const {
    return backward_batch(x, output_grad);
  }

  friend bool operator==(const DenseNet& a, const DenseNet& b) {
    return a.sizes_ == b.sizes_ && a.params_ == b.params_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

/// Layer-size list for an input, hidden layers and an output.
inline std::vector<int> layer_sizes(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(input);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

}  // namespace acerax
