#pragma once

// Run outputs: metrics CSV, run manifest (JSON), binary content hash.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "acerax/config.hpp"
#include "acerax/config_file.hpp"
#include "acerax/errors.hpp"
#include "acerax/training.hpp"

namespace acerax {

inline constexpr const char* kMetricsHeader =
    "step,mean_return,std_return,min_eta,max_eta,critic_loss,dispersion_loss,actor_term";

inline std::string metrics_line(const MetricsRow& r) {
  using detail::format_real;
  return std::to_string(r.step) + ',' + format_real(r.mean_return) + ',' + format_real(r.std_return) + ',' +
         format_real(r.min_eta) + ',' + format_real(r.max_eta) + ',' + format_real(r.critic_loss) + ',' +
         format_real(r.dispersion_loss) + ',' + format_real(r.actor_term);
}

/// Comma separated, '.' decimal, header row, LF line endings.
inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw load_error(path + ": unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw load_error(path + ": expected 8 fields, got " + std::to_string(f.size()));
    MetricsRow r;
    r.step = detail::parse_int(f[0]);
    r.mean_return = detail::parse_real(f[1]);
    r.std_return = detail::parse_real(f[2]);
    r.min_eta = detail::parse_real(f[3]);
    r.max_eta = detail::parse_real(f[4]);
    r.critic_loss = detail::parse_real(f[5]);
    r.dispersion_loss = detail::parse_real(f[6]);
    r.actor_term = detail::parse_real(f[7]);
    rows.push_back(r);
  }
  return rows;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw load_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// SHA-1 of "blob <size>\0<contents>", as git hashes file contents.
inline std::string git_blob_hash(const std::string& contents) {
  const std::string header = "blob " + std::to_string(contents.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, contents.data(), contents.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 0xF];
  }
  return out;
}

/// Hash of the running executable, or "unknown" where /proc is unavailable.
inline std::string current_binary_hash() {
  try {
    return git_blob_hash(read_file_bytes("/proc/self/exe"));
  } catch (const std::exception&) {
    return "unknown";
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  Config config;
  std::string binary_hash;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> outputs;  // role -> path
};

inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "acerax-manifest-1";
  j["seed"] = m.config.seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_values(m.config)) cfg[k] = v;
  j["config"] = cfg;
  j["binary_hash"] = m.binary_hash;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  return j;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << manifest_json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw load_error(path + ": " + e.what());
  }
  RunManifest m;
  if (!j.contains("config") || !j["config"].is_object()) throw load_error(path + ": manifest has no config object");
  for (const auto& [k, v] : j["config"].items()) {
    if (!v.is_string()) throw load_error(path + ": config value for '" + k + "' is not a string");
    set_config_value(m.config, k, v.get<std::string>());
  }
  m.binary_hash = j.value("binary_hash", "");
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace acerax
