#pragma once

// Checkpoint layout (all integers uint32 little-endian, reals IEEE-754
// float64 little-endian):
//
//   "ACERAX1"                      7-byte magic, no terminator
//   network count
//   per network:
//     number of layer sizes L
//     L layer sizes
//     parameter values, count = sum over layers of (fan_in + 1) * fan_out,
//     in DenseNet::params() order
//
// A policy checkpoint stores three networks: mean, log-std, critic.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "acerax/errors.hpp"
#include "acerax/nn.hpp"

namespace acerax {

inline constexpr std::string_view kCheckpointMagic = "ACERAX1";

namespace detail {

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return value;
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& out, double v) {
  const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw load_error("truncated file (expected uint32)");
  return to_little_endian(v);
}

inline double read_f64(std::istream& in) {
  std::uint64_t bits = 0;
  if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw load_error("truncated file (expected float64)");
  return std::bit_cast<double>(to_little_endian(bits));
}

inline void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), magic.size()); }

inline void read_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), got.size()) || got != magic)
    throw load_error("bad magic: expected \"" + std::string(magic) + "\"");
}

}  // namespace detail

inline void write_networks(std::ostream& out, const std::vector<const DenseNet*>& nets) {
  detail::write_magic(out, kCheckpointMagic);
  detail::write_u32(out, static_cast<std::uint32_t>(nets.size()));
  for (const DenseNet* net : nets) {
    detail::write_u32(out, static_cast<std::uint32_t>(net->layer_sizes().size()));
    for (int s : net->layer_sizes()) detail::write_u32(out, static_cast<std::uint32_t>(s));
    for (double p : net->params()) detail::write_f64(out, p);
  }
}

inline std::vector<DenseNet> read_networks(std::istream& in) {
  detail::read_magic(in, kCheckpointMagic);
  const std::uint32_t count = detail::read_u32(in);
  if (count > 1024) throw load_error("implausible network count " + std::to_string(count));
  std::vector<DenseNet> nets;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t n_sizes = detail::read_u32(in);
    if (n_sizes < 2 || n_sizes > 64) throw load_error("implausible layer count " + std::to_string(n_sizes));
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) {
      const std::uint32_t v = detail::read_u32(in);
      if (v == 0 || v > (1u << 20)) throw load_error("implausible layer size " + std::to_string(v));
      s = static_cast<int>(v);
    }
    DenseNet net(sizes);
    for (auto& p : net.params()) p = detail::read_f64(in);
    nets.push_back(std::move(net));
  }
  return nets;
}

inline void save_networks(const std::string& path, const std::vector<const DenseNet*>& nets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_networks(out, nets);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<DenseNet> load_networks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error("cannot open " + path);
  return read_networks(in);
}

}  // namespace acerax
