#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>

#include "acerax/replay.hpp"
#include "acerax/synthetic.hpp"

using namespace acerax;

namespace {

Transition make(double r, bool terminal = false, bool truncated = false) {
  Transition t;
  t.s = Eigen::VectorXd::Constant(2, r);
  t.a = Eigen::VectorXd::Constant(1, -r);
  t.r = r;
  t.m = Eigen::VectorXd::Constant(1, 0.5 * r);
  t.phi = 0.25;
  t.terminal = terminal;
  t.truncated = truncated;
  t.next_s = Eigen::VectorXd::Constant(2, r + 1);
  return t;
}

ReplayBuffer filled(std::size_t capacity, int count) {
  ReplayBuffer b(capacity);
  for (int k = 0; k < count; ++k) b.push(make(k));
  return b;
}

}  // namespace

TEST(Replay, RingEvictsOldest) {
  const ReplayBuffer b = filled(10, 11);
  EXPECT_EQ(b.size(), 10u);
  EXPECT_EQ(b.oldest_time_index(), 1);
  EXPECT_THROW(b.at_time(0), std::out_of_range);
  EXPECT_EQ(b.at_time(10).r, 10.0);
}

TEST(Replay, StoredBitIdentical) {
  ReplayBuffer b(4);
  Transition t = make(0.123456789);
  t.a[0] = std::nextafter(1.0, 2.0);
  b.push(t);
  const Transition& back = b.at_time(0);
  EXPECT_EQ(back.s, t.s);
  EXPECT_EQ(back.a, t.a);
  EXPECT_EQ(back.m, t.m);
  EXPECT_EQ(back.r, t.r);
  EXPECT_EQ(back.phi, t.phi);
  EXPECT_EQ(back.next_s, t.next_s);
}

TEST(Replay, TimeIndicesContiguous) {
  const ReplayBuffer b = filled(100, 1000);
  EXPECT_EQ(b.oldest_time_index(), 900);
  EXPECT_EQ(b.next_time_index(), 1000);
  for (std::int64_t i = 900; i < 1000; ++i) EXPECT_EQ(b.at_time(i).time_index, i);
}

TEST(Replay, RejectsBadDensity) {
  ReplayBuffer b(4);
  Transition t = make(1);
  t.phi = 0.0;
  EXPECT_THROW(b.push(t), corrupt_buffer_error);
  t.phi = -1.0;
  EXPECT_THROW(b.push(t), corrupt_buffer_error);
  t.phi = std::nan("");
  EXPECT_THROW(b.push(t), corrupt_buffer_error);
  EXPECT_TRUE(b.empty());
  EXPECT_THROW(ReplayBuffer(0), config_error);
}

TEST(Replay, ChecksDensityAgainstBehaviour) {
  ReplayBuffer b(4);
  const GaussianHead h{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, -1.0)};
  Transition t = make(1);
  t.phi = std::exp(log_density(h, t.a));
  EXPECT_NO_THROW(b.push(t, h));
  t.phi *= 1.001;
  EXPECT_THROW(b.push(t, h), corrupt_buffer_error);
}

TEST(Replay, NotReadyUntilWindowExists) {
  Rng rng(1);
  ReplayBuffer b = filled(50, 3);
  EXPECT_FALSE(b.sample_window(3, rng).has_value());
  EXPECT_THROW(b.sample_window(0, rng), config_error);
  b.push(make(3));
  EXPECT_TRUE(b.sample_window(3, rng).has_value());
}

TEST(Replay, SingleAdmissibleWindow) {
  Rng rng(2);
  const int n = 5;
  const ReplayBuffer b = filled(100, n + 1);
  for (int k = 0; k < 50; ++k) {
    const Window w = *b.sample_window(n, rng);
    ASSERT_EQ(w.length(), static_cast<std::size_t>(n));
    EXPECT_EQ(w.first().time_index, 0);
    EXPECT_FALSE(w.terminal);
  }
}

TEST(Replay, WindowCutAtTerminal) {
  ReplayBuffer b(20);
  for (int k = 0; k < 12; ++k) b.push(make(k, k == 3));
  const Window w = b.window_at(1, 5);
  EXPECT_EQ(w.length(), 3u);  // steps 1, 2, 3
  EXPECT_TRUE(w.terminal);
  EXPECT_EQ(w.final_state(), b.at_time(3).next_s);
}

TEST(Replay, WindowCutAtTimeLimitKeepsBootstrap) {
  ReplayBuffer b(20);
  for (int k = 0; k < 12; ++k) b.push(make(k, false, k == 2));
  const Window w = b.window_at(0, 5);
  EXPECT_EQ(w.length(), 3u);
  EXPECT_FALSE(w.terminal);
}

TEST(Replay, WindowsStayInsideStoredRange) {
  Rng rng(3);
  ReplayBuffer b(30);
  for (int k = 0; k < 95; ++k) b.push(make(k, k % 7 == 0, k % 11 == 0));
  for (int draw = 0; draw < 2000; ++draw) {
    const Window w = *b.sample_window(4, rng);
    for (std::size_t k = 0; k < w.length(); ++k) {
      EXPECT_GE(w.steps[k]->time_index, b.oldest_time_index());
      EXPECT_EQ(w.steps[k]->time_index, w.first().time_index + static_cast<std::int64_t>(k));
      if (k + 1 < w.length()) {
        EXPECT_FALSE(w.steps[k]->ends_episode());
      }
    }
    EXPECT_LE(w.first().time_index, b.next_time_index() - 1 - 4);
  }
}

TEST(Replay, UniformOverAdmissibleStarts) {
  Rng rng(4);
  const int n = 10, starts = 50;
  ReplayBuffer b(starts + n);
  for (int k = 0; k < 200; ++k) b.push(make(k));  // wrapped ring
  ASSERT_EQ(b.admissible_starts(n), starts);
  std::vector<double> counts(starts, 0.0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) counts[static_cast<std::size_t>(b.sample_window(n, rng)->first().time_index - b.oldest_time_index())] += 1;
  const double expected = static_cast<double>(draws) / starts;
  const double sd = std::sqrt(draws * (1.0 / starts) * (1.0 - 1.0 / starts));
  double chi2 = 0.0;
  for (double c : counts) {
    EXPECT_LT(std::abs(c - expected), 5 * sd);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(starts - 1), chi2));
  EXPECT_GT(p, 0.001) << "chi2 " << chi2;
}

TEST(Replay, DumpRoundTrip) {
  Rng rng(5);
  const PolicyParams p{DenseNet::glorot({2, 3, 1}, rng), DenseNet::glorot({2, 2, 1}, rng)};
  const ReplayBuffer b = synthetic_buffer(p, 25, 0.2, rng);
  const auto path = (std::filesystem::temp_directory_path() / "acerax_replay_dump.bin").string();
  b.dump(path);
  const std::vector<Transition> back = ReplayBuffer::read_dump(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), b.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    const Transition& t = b.at_time(b.oldest_time_index() + static_cast<std::int64_t>(k));
    EXPECT_EQ(back[k].s, t.s);
    EXPECT_EQ(back[k].a, t.a);
    EXPECT_EQ(back[k].phi, t.phi);
    EXPECT_EQ(back[k].terminal, t.terminal);
    EXPECT_EQ(back[k].truncated, t.truncated);
    EXPECT_EQ(back[k].time_index, t.time_index);
  }
}
