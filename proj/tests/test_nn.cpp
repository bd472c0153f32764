#include <gtest/gtest.h>

#include <vector>

#include "acerax/gradcheck.hpp"
#include "acerax/nn.hpp"
#include "oracle.hpp"

using namespace acerax;

namespace {

oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(DenseNet, ZeroNetMapsToZero) {
  const DenseNet net({3, 4, 2});
  const Eigen::VectorXd y = net.forward(Eigen::Vector3d(1.0, -2.0, 0.5));
  EXPECT_EQ(y, Eigen::VectorXd::Zero(2));
}

TEST(DenseNet, IdentityLayer) {
  DenseNet net({2, 2});
  net.weights(0) = Eigen::Matrix2d::Identity();
  const Eigen::VectorXd y = net.forward(Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(y, Eigen::Vector2d(1.0, 2.0));
}

TEST(DenseNet, MatchesIndependentForward) {
  Rng rng(11);
  for (const auto& sizes : std::vector<std::vector<int>>{{2, 3, 1}, {3, 5, 2}, {4, 7, 6, 3}}) {
    DenseNet net = DenseNet::glorot(sizes, rng);
    std::normal_distribution<double> n01;
    for (auto& p : net.params()) p += 0.1 * n01(rng);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(sizes.front());
      for (auto& v : x) v = n01(rng);
      const Eigen::VectorXd y = net.forward(x);
      const oracle::Vec expected = oracle::forward(sizes, to_vec(net.params()), to_vec(x));
      for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expected[i], 1e-14);
    }
  }
}

TEST(DenseNet, HandComputedTwoThreeOne) {
  DenseNet net({2, 3, 1});
  net.weights(0) << 0.5, -1.0, 0.25, 0.75, -0.5, 0.0;
  net.bias(0) << 0.1, -0.2, 0.3;
  net.weights(1) << 1.0, -2.0, 0.5;
  net.bias(1) << 0.05;
  // h = tanh([0.5*1 - 1*2 + 0.1, 0.25*1 + 0.75*2 - 0.2, -0.5*1 + 0 + 0.3])
  const double y = std::tanh(-1.4) - 2.0 * std::tanh(1.55) + 0.5 * std::tanh(-0.2) + 0.05;
  EXPECT_NEAR(net.forward(Eigen::Vector2d(1.0, 2.0))[0], y, 1e-15);
}

TEST(DenseNet, BatchColumnsMatchSingleForward) {
  Rng rng(3);
  const DenseNet net = DenseNet::glorot({3, 8, 2}, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 17);
  const Eigen::MatrixXd y = net.forward_batch(x);
  // matrix and matrix-vector kernels may round differently
  for (Eigen::Index c = 0; c < x.cols(); ++c) EXPECT_TRUE(y.col(c).isApprox(net.forward(x.col(c)), 1e-14));
}

TEST(DenseNet, ForwardIsDeterministic) {
  Rng rng(5);
  const DenseNet net = DenseNet::glorot({3, 6, 2}, rng);
  const Eigen::Vector3d x(0.3, -0.1, 2.0);
  EXPECT_EQ(net.forward(x), net.forward(x));
  const DenseNet copy = net;
  EXPECT_EQ(copy.forward(x), net.forward(x));
}

TEST(DenseNet, InputShapeMismatchThrows) {
  const DenseNet net({3, 2});
  EXPECT_THROW(net.forward(Eigen::Vector2d(1, 2)), shape_error);
  EXPECT_THROW(net.backward(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 1, 1)), shape_error);
  EXPECT_THROW(DenseNet({3}), shape_error);
  EXPECT_THROW(DenseNet({3, 0, 1}), shape_error);
}

TEST(DenseNet, GlorotWithinLimitsAndZeroBias) {
  Rng rng(9);
  const DenseNet net = DenseNet::glorot({5, 7, 3}, rng);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (net.fan_in(l) + net.fan_out(l)));
    EXPECT_LE(net.weights(l).cwiseAbs().maxCoeff(), limit);
    EXPECT_EQ(net.bias(l), Eigen::VectorXd::Zero(net.fan_out(l)));
  }
  EXPECT_EQ(net.parameter_count(), (5 + 1) * 7 + (7 + 1) * 3);
}

TEST(Backward, ZeroUpstreamGivesZero) {
  Rng rng(1);
  const DenseNet net = DenseNet::glorot({3, 5, 2}, rng);
  const FlatGradient g = net.backward(Eigen::Vector3d(1, 2, 3), Eigen::Vector2d::Zero());
  EXPECT_EQ(g.values, Eigen::VectorXd::Zero(net.parameter_count()));
}

TEST(Backward, LinearLayerIsOuterProduct) {
  Rng rng(2);
  const DenseNet net = DenseNet::glorot({3, 2}, rng);
  const Eigen::Vector3d x(0.5, -1.0, 2.0);
  const Eigen::Vector2d g(3.0, -0.25);
  const FlatGradient grad = net.backward(x, g);
  const Eigen::Map<const Eigen::MatrixXd> gw(grad.values.data(), 2, 3);
  EXPECT_TRUE(gw.isApprox(g * x.transpose()));
  EXPECT_EQ(grad.values.tail(2), g);
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(4);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    DenseNet net = DenseNet::glorot({3, 5, 2}, rng);
    for (auto& p : net.params()) p += 0.1 * n01(rng);
    Eigen::Vector3d x;
    Eigen::Vector2d g;
    for (auto& v : x) v = n01(rng);
    for (auto& v : g) v = n01(rng);
    const FlatGradient analytic = net.backward(x, g);
    auto loss = [&](const Eigen::VectorXd& p) {
      DenseNet probe = net;
      probe.params() = p;
      return g.dot(probe.forward(x));
    };
    const GradCheckReport r = finite_diff_check(loss, net.params(), analytic.values, 1e-5);
    EXPECT_TRUE(r.passed) << "trial " << trial << " error " << r.max_relative_error;
  }
}

TEST(Backward, BatchSumsColumns) {
  Rng rng(6);
  const DenseNet net = DenseNet::glorot({2, 4, 3}, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 5);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Random(3, 5);
  FlatGradient sum(net.parameter_count());
  for (Eigen::Index c = 0; c < 5; ++c) sum += net.backward(x.col(c), g.col(c));
  EXPECT_TRUE(net.backward_batch(x, g).values.isApprox(sum.values, 1e-13));
}
