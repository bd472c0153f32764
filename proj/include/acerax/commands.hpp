#pragma once

// Entry points behind the command-line tool. Each returns a process exit code:
// 0 success, 1 a check or sweep cell failed, 2 bad input (config, files).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "acerax/checkpoint.hpp"
#include "acerax/config.hpp"
#include "acerax/config_file.hpp"
#include "acerax/envs.hpp"
#include "acerax/gradient_suite.hpp"
#include "acerax/io.hpp"
#include "acerax/training.hpp"

namespace acerax {

namespace fs = std::filesystem;

struct ConfigSources {
  std::string preset = "default";
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied in order
};

/// Precedence, lowest first: preset, ACERAX_SEED, config file, overrides.
inline Config resolve_config(const ConfigSources& src) {
  Config c = preset_config(src.preset);
  if (const char* seed = std::getenv("ACERAX_SEED"); seed && *seed) {
    try {
      set_config_value(c, "seed", seed);
    } catch (const config_error& e) {
      throw config_error(std::string("ACERAX_SEED: ") + e.what());
    }
  }
  if (src.config_path) apply_config_file(c, *src.config_path);
  for (const auto& [k, v] : src.overrides) {
    try {
      set_config_value(c, k, v);
    } catch (const config_error& e) {
      throw config_error(std::string("--") + k + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

/// --out, then ACERAX_OUT, then ./acerax_out.
inline std::string output_root(const std::optional<std::string>& out) {
  if (out && !out->empty()) return *out;
  if (const char* env = std::getenv("ACERAX_OUT"); env && *env) return env;
  return "acerax_out";
}

inline void save_policy_checkpoint(const std::string& path, const Learner& l) {
  save_networks(path, {&l.policy.mu_net, &l.policy.eta_net, &l.critic});
}

struct TrainedRun {
  std::vector<MetricsRow> curve;
  RunManifest manifest;
  std::int64_t eta_clamp_events = 0;
};

/// Runs one training job and writes metrics.csv, checkpoint.bin and
/// manifest.json into `dir`.
inline TrainedRun train_to_directory(const Config& config, const std::string& dir, const std::string& binary_hash,
                                     const std::function<void(const MetricsRow&)>& on_row = {}) {
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.config = config;
  manifest.binary_hash = binary_hash;
  manifest.started_at = utc_timestamp();
  const auto env = make_env(config.env, config.env_noise);
  TrainingResult result = run_training(*env, config, on_row);
  manifest.outputs = {{"metrics", (fs::path(dir) / "metrics.csv").string()},
                      {"checkpoint", (fs::path(dir) / "checkpoint.bin").string()},
                      {"manifest", (fs::path(dir) / "manifest.json").string()}};
  write_metrics_csv(manifest.outputs["metrics"], result.curve);
  save_policy_checkpoint(manifest.outputs["checkpoint"], result.learner);
  manifest.finished_at = utc_timestamp();
  write_manifest(manifest.outputs["manifest"], manifest);
  return {std::move(result.curve), std::move(manifest), result.eta_clamp_events};
}

inline int cmd_train(const Config& config, const std::string& out_dir, std::ostream& out, std::ostream& err,
                     const std::string& binary_hash = current_binary_hash()) {
  try {
    const TrainedRun run = train_to_directory(config, out_dir, binary_hash, [&](const MetricsRow& r) {
      out << "step " << r.step << "  mean_return " << detail::format_real(r.mean_return) << "  eta ["
          << detail::format_real(r.min_eta) << ", " << detail::format_real(r.max_eta) << "]\n";
      out.flush();
    });
    out << "wrote " << run.manifest.outputs.at("metrics") << '\n';
    return 0;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "training failed: " << e.what() << '\n';
    return 1;
  }
}

struct SweepSpec {
  std::string param;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds{1};
  int jobs = 1;
};

struct SweepCell {
  std::string value;
  std::uint64_t seed = 0;
  std::string dir;
  bool ok = false;
  std::string error;
  MetricsRow final_row;
};

inline constexpr const char* kSweepSummaryHeader =
    "param,value,seed,status,final_step,final_mean_return,final_std_return,final_min_eta,final_max_eta";
inline constexpr const char* kSweepByValueHeader =
    "param,value,seeds_ok,mean_final_return,std_final_return,mean_final_min_eta,mean_final_max_eta";

inline std::string sweep_summary_line(const std::string& param, const SweepCell& c) {
  using detail::format_real;
  std::string line = param + ',' + c.value + ',' + std::to_string(c.seed) + ',' + (c.ok ? "ok" : "failed") + ',';
  if (!c.ok) return line + ",,,,";
  return line + std::to_string(c.final_row.step) + ',' + format_real(c.final_row.mean_return) + ',' +
         format_real(c.final_row.std_return) + ',' + format_real(c.final_row.min_eta) + ',' +
         format_real(c.final_row.max_eta);
}

/// Per value over successful seeds: mean and population std of the final
/// mean return, mean of the final eta extremes.
inline std::vector<std::string> sweep_by_value_lines(const std::string& param, const std::vector<std::string>& values,
                                                     const std::vector<SweepCell>& cells) {
  using detail::format_real;
  std::vector<std::string> lines;
  for (const auto& v : values) {
    std::vector<const SweepCell*> ok;
    for (const auto& c : cells)
      if (c.value == v && c.ok) ok.push_back(&c);
    std::string line = param + ',' + v + ',' + std::to_string(ok.size()) + ',';
    if (ok.empty()) {
      lines.push_back(line + ",,,");
      continue;
    }
    const double n = static_cast<double>(ok.size());
    double mean = 0, min_eta = 0, max_eta = 0;
    for (const auto* c : ok) {
      mean += c->final_row.mean_return / n;
      min_eta += c->final_row.min_eta / n;
      max_eta += c->final_row.max_eta / n;
    }
    double var = 0;
    for (const auto* c : ok) var += (c->final_row.mean_return - mean) * (c->final_row.mean_return - mean) / n;
    lines.push_back(line + format_real(mean) + ',' + format_real(std::sqrt(var)) + ',' + format_real(min_eta) + ',' +
                    format_real(max_eta));
  }
  return lines;
}

/// Runs every (value, seed) cell. Cells write into
/// <out>/<param>_<value>/seed_<seed>/; summary.csv and summary_by_value.csv
/// are written once all cells have finished.
inline int cmd_sweep(const Config& base, const SweepSpec& spec, const std::string& out_dir, std::ostream& out,
                     std::ostream& err, const std::string& binary_hash = current_binary_hash()) {
  if (spec.values.empty()) {
    out << "empty sweep: nothing to run\n";
    return 0;
  }
  if (!find_config_key(spec.param)) {
    err << "config error: unknown sweep parameter '" << spec.param << "'\n";
    return 2;
  }
  if (spec.seeds.empty()) {
    err << "config error: sweep needs at least one seed\n";
    return 2;
  }

  std::vector<SweepCell> cells;
  for (const auto& v : spec.values)
    for (auto s : spec.seeds) {
      SweepCell cell;
      cell.value = v;
      cell.seed = s;
      cell.dir = (fs::path(out_dir) / (spec.param + "_" + v) / ("seed_" + std::to_string(s))).string();
      cells.push_back(std::move(cell));
    }

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cells.size();) {
      SweepCell& cell = cells[k];
      try {
        Config c = base;
        set_config_value(c, spec.param, cell.value);
        set_config_value(c, "seed", std::to_string(cell.seed));
        c.validate();
        const TrainedRun run = train_to_directory(c, cell.dir, binary_hash);
        cell.final_row = run.curve.back();
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      if (cell.ok)
        out << spec.param << '=' << cell.value << " seed " << cell.seed << ": final mean_return "
            << detail::format_real(cell.final_row.mean_return) << '\n';
      else
        err << spec.param << '=' << cell.value << " seed " << cell.seed << ": FAILED: " << cell.error << '\n';
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "summary.csv", std::ios::binary);
    f << kSweepSummaryHeader << '\n';
    for (const auto& c : cells) f << sweep_summary_line(spec.param, c) << '\n';
  }
  {
    std::ofstream f(fs::path(out_dir) / "summary_by_value.csv", std::ios::binary);
    f << kSweepByValueHeader << '\n';
    for (const auto& line : sweep_by_value_lines(spec.param, spec.values, cells)) f << line << '\n';
  }
  const bool all_ok = std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.ok; });
  out << "wrote " << (fs::path(out_dir) / "summary.csv").string() << '\n';
  return all_ok ? 0 : 1;
}

/// Name accepted by cmd_eval in place of a checkpoint path: the finite-horizon
/// Riccati controller of lqr2.
inline constexpr std::string_view kRiccatiReference = "riccati";

inline PolicyParams load_policy_checkpoint(const std::string& path, const Config& config, const EnvSpec& env) {
  std::vector<DenseNet> nets = load_networks(path);
  if (nets.size() < 2) throw load_error(path + ": expected mean and log-std networks");
  const auto want_mu = layer_sizes(env.state_dim, config.shapes.mu, env.action_dim);
  const auto want_eta = layer_sizes(env.state_dim, config.shapes.eta, env.action_dim);
  auto show = [](const std::vector<int>& s) { return detail::join(s); };
  if (nets[0].layer_sizes() != want_mu)
    throw load_error(path + ": mean network has shape " + show(nets[0].layer_sizes()) + ", configured " + show(want_mu));
  if (nets[1].layer_sizes() != want_eta)
    throw load_error(path + ": log-std network has shape " + show(nets[1].layer_sizes()) + ", configured " +
                     show(want_eta));
  return {std::move(nets[0]), std::move(nets[1])};
}

inline int cmd_eval(const Config& config, const std::string& checkpoint, int episodes, const std::string& out_dir,
                    std::ostream& out, std::ostream& err) {
  if (episodes < 1) {
    err << "eval: episodes must be at least 1\n";
    return 2;
  }
  EvalResult result;
  try {
    const auto env = make_env(config.env, config.env_noise);
    if (checkpoint == kRiccatiReference) {
      result = evaluate_lqr2_oracle(*env, episodes, config.seed);
    } else {
      const PolicyParams policy = load_policy_checkpoint(checkpoint, config, env->spec());
      result = evaluate_policy(policy, *env, episodes, config.seed);
    }
  } catch (const load_error& e) {
    err << "load error: " << e.what() << '\n';
    return 2;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  out << "env " << config.env << "  episodes " << episodes << "  mean_return " << detail::format_real(result.mean_return)
      << "  std_return " << detail::format_real(result.std_return) << '\n';

  fs::create_directories(out_dir);
  const fs::path csv = fs::path(out_dir) / "eval.csv";
  const bool fresh = !fs::exists(csv);
  std::ofstream f(csv, std::ios::binary | std::ios::app);
  if (fresh) f << "checkpoint,env,episodes,seed,mean_return,std_return\n";
  f << checkpoint << ',' << config.env << ',' << episodes << ',' << config.seed << ','
    << detail::format_real(result.mean_return) << ',' << detail::format_real(result.std_return) << '\n';
  return 0;
}

/// Runs the finite-difference suite for the configured environment's
/// dimensions and prints the worst coordinate of each loss.
inline int cmd_gradcheck(const Config& config, const GradientSuiteOptions& options, std::ostream& out,
                         std::ostream& err) {
  try {
    const auto env = make_env(config.env, config.env_noise);
    const GradientSuiteReport report =
        gradient_suite(config, env->spec().state_dim, env->spec().action_dim, options);
    for (const auto& lc : report.losses) {
      out << lc.name << ": max_rel_error " << detail::format_real(lc.worst.max_relative_error) << " at coordinate "
          << lc.worst.worst_index << " (draw " << lc.worst_draw << ", analytic "
          << detail::format_real(lc.worst.analytic_at_worst) << ", numeric "
          << detail::format_real(lc.worst.numeric_at_worst) << ") "
          << (lc.worst.max_relative_error <= options.tolerance ? "ok" : "FAIL") << '\n';
    }
    out << (report.passed ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance "
        << detail::format_real(options.tolerance) << ", " << options.draws << " draws)\n";
    return report.passed ? 0 : 1;
  } catch (const std::exception& e) {
    err << "gradcheck error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace acerax
