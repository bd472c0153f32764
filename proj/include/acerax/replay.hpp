#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acerax/checkpoint.hpp"
#include "acerax/errors.hpp"
#include "acerax/gaussian_policy.hpp"
#include "acerax/nn.hpp"

namespace acerax {

/// One registered interaction step.
struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;  // as sampled, before clipping to the action box
  double r = 0.0;
  Eigen::VectorXd m;  // mode of the behaviour distribution at s
  double phi = 0.0;   // behaviour density of a
  bool terminal = false;   // episode ended in a true terminal state
  bool truncated = false;  // episode cut by the time limit
  Eigen::VectorXd next_s;
  std::int64_t time_index = 0;

  bool ends_episode() const { return terminal || truncated; }
};

/// Consecutive transitions i..i+L-1 from one episode, L <= n.
struct Window {
  std::vector<const Transition*> steps;
  bool terminal = false;  // V after the last step is zero

  std::size_t length() const { return steps.size(); }
  const Transition& first() const { return *steps.front(); }
  const Eigen::VectorXd& final_state() const { return steps.back()->next_s; }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw config_error("replay capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity, 1u << 16));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return ring_.size(); }
  bool empty() const { return ring_.empty(); }
  std::int64_t next_time_index() const { return next_time_; }
  std::int64_t oldest_time_index() const { return next_time_ - static_cast<std::int64_t>(ring_.size()); }

  /// Stores `t`, evicting the oldest transition when full. The time index is
  /// assigned here.
  void push(Transition t) {
    if (!(t.phi > 0.0) || !std::isfinite(t.phi)) throw corrupt_buffer_error("transition density must be positive and finite");
    t.time_index = next_time_++;
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// As push, additionally checking that phi is the behaviour head's density
  /// of the stored action.
  void push(Transition t, const GaussianHead& behaviour) {
    const double expected = std::exp(log_density(behaviour, t.a));
    if (!(std::abs(t.phi - expected) <= 1e-12 * std::max(1.0, expected)))
      throw corrupt_buffer_error("transition density disagrees with the behaviour policy");
    push(std::move(t));
  }

  const Transition& at_time(std::int64_t time_index) const {
    if (time_index < oldest_time_index() || time_index >= next_time_)
      throw std::out_of_range("time index " + std::to_string(time_index) + " not in buffer");
    const auto offset = static_cast<std::size_t>(time_index - oldest_time_index());
    return ring_[(head_ + offset) % ring_.size()];
  }

  /// Number of start indices with a full n-step successor.
  std::int64_t admissible_starts(int n) const {
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(ring_.size()) - n);
  }

  bool ready(int n) const { return admissible_starts(n) > 0; }

  /// Window starting at `start`, cut after the first step that ends an episode.
  Window window_at(std::int64_t start, int n) const {
    Window w;
    w.steps.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const Transition& t = at_time(start + k);
      w.steps.push_back(&t);
      if (t.ends_episode()) {
        w.terminal = t.terminal;
        break;
      }
    }
    return w;
  }

  /// Start drawn uniformly from the oldest index up to newest - n. Empty when
  /// fewer than n + 1 transitions are stored.
  std::optional<Window> sample_window(int n, Rng& rng) const {
    if (n < 1) throw config_error("window length n must be at least 1");
    const std::int64_t starts = admissible_starts(n);
    if (starts <= 0) return std::nullopt;
    std::uniform_int_distribution<std::int64_t> pick(0, starts - 1);
    return window_at(oldest_time_index() + pick(rng), n);
  }

  /// Debug dump; same numeric encoding as checkpoints, layout not stable.
  void dump(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    detail::write_magic(out, "ACERAXR");
    detail::write_u32(out, static_cast<std::uint32_t>(ring_.size()));
    for (std::int64_t i = oldest_time_index(); i < next_time_; ++i) {
      const Transition& t = at_time(i);
      detail::write_u32(out, static_cast<std::uint32_t>(t.s.size()));
      detail::write_u32(out, static_cast<std::uint32_t>(t.a.size()));
      detail::write_f64(out, static_cast<double>(t.time_index));
      for (double v : t.s) detail::write_f64(out, v);
      for (double v : t.a) detail::write_f64(out, v);
      detail::write_f64(out, t.r);
      for (double v : t.m) detail::write_f64(out, v);
      detail::write_f64(out, t.phi);
      detail::write_u32(out, (t.terminal ? 1u : 0u) | (t.truncated ? 2u : 0u));
      for (double v : t.next_s) detail::write_f64(out, v);
    }
  }

  static std::vector<Transition> read_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw load_error("cannot open " + path);
    detail::read_magic(in, "ACERAXR");
    const std::uint32_t count = detail::read_u32(in);
    std::vector<Transition> out;
    out.reserve(count);
    auto read_vec = [&](std::uint32_t n) {
      Eigen::VectorXd v(n);
      for (auto& x : v) x = detail::read_f64(in);
      return v;
    };
    for (std::uint32_t k = 0; k < count; ++k) {
      Transition t;
      const std::uint32_t ds = detail::read_u32(in);
      const std::uint32_t da = detail::read_u32(in);
      t.time_index = static_cast<std::int64_t>(detail::read_f64(in));
      t.s = read_vec(ds);
      t.a = read_vec(da);
      t.r = detail::read_f64(in);
      t.m = read_vec(da);
      t.phi = detail::read_f64(in);
      const std::uint32_t flags = detail::read_u32(in);
      t.terminal = flags & 1u;
      t.truncated = flags & 2u;
      t.next_s = read_vec(ds);
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  // oldest element once the ring is full
  std::int64_t next_time_ = 0;
};

}  // namespace acerax
