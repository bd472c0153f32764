// acerax: train, sweep, evaluate and gradient-check from the command line.
//
//   acerax train [--preset P] [--config FILE] [--out DIR] [--<key> VALUE ...]
//   acerax sweep --param KEY --values V1,V2 [--seeds 1,2,3] [--jobs N] ...
//   acerax eval --checkpoint PATH|riccati [--episodes N] ...
//   acerax gradcheck [--draws N] [--tolerance T] ...
//
// Every config key (see `acerax train --help`) can be overridden with --<key>.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acerax/commands.hpp"

namespace {

struct Common {
  acerax::ConfigSources sources;
  std::optional<std::string> out;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--preset", c.sources.preset, "default, desk or full")->capture_default_str();
  sub->add_option("--config", c.sources.config_path, "config file (ini-style sections)");
  sub->add_option("--out", c.out, "output directory (else $ACERAX_OUT, else ./acerax_out)");
  for (const auto& key : acerax::config_keys())
    sub->add_option("--" + key.name, c.overrides[key.name], key.help)->group(key.section + " overrides");
}

acerax::Config resolve(const Common& c, const CLI::App* sub) {
  acerax::ConfigSources src = c.sources;
  // keep the table order so that later keys see earlier ones
  for (const auto& key : acerax::config_keys())
    if (sub->count("--" + key.name) > 0) src.overrides.emplace_back(key.name, c.overrides.at(key.name));
  return acerax::resolve_config(src);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ACER with adaptive exploration: training and evaluation"};
  app.require_subcommand(1);

  Common train_opts, sweep_opts, eval_opts, grad_opts;

  auto* train = app.add_subcommand("train", "train one agent and write metrics.csv, checkpoint.bin, manifest.json");
  add_common(train, train_opts);
  std::optional<std::string> from_manifest;
  train->add_option("--from-manifest", from_manifest, "rerun with the config recorded in a manifest.json");

  auto* sweep = app.add_subcommand("sweep", "train over a grid of one parameter and several seeds");
  add_common(sweep, sweep_opts);
  acerax::SweepSpec spec;
  std::string values_text;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  sweep->add_option("--param", spec.param, "config key to vary")->required();
  sweep->add_option("--values", values_text, "values separated by ';' or ','")->required();
  sweep->add_option("--seeds", seeds, "seeds")->delimiter(',')->capture_default_str();
  sweep->add_option("--jobs", spec.jobs, "cells run in parallel")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (or the lqr2 Riccati controller)");
  add_common(eval, eval_opts);
  std::string checkpoint;
  int episodes = 5;
  eval->add_option("--checkpoint", checkpoint, "checkpoint.bin path or 'riccati'")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes")->capture_default_str();

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the three gradient estimates");
  add_common(grad, grad_opts);
  acerax::GradientSuiteOptions gopts;
  grad->add_option("--draws", gopts.draws, "random parameter draws")->capture_default_str();
  grad->add_option("--batch", gopts.minibatch, "windows per draw")->capture_default_str();
  grad->add_option("--tolerance", gopts.tolerance, "max relative error")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      acerax::Config config;
      if (from_manifest) {
        config = acerax::read_manifest(*from_manifest).config;
        for (const auto& key : acerax::config_keys())
          if (train->count("--" + key.name) > 0) acerax::set_config_value(config, key.name, train_opts.overrides.at(key.name));
        config.validate();
      } else {
        config = resolve(train_opts, train);
      }
      return acerax::cmd_train(config, acerax::output_root(train_opts.out), std::cout, std::cerr);
    }
    if (sweep->parsed()) {
      const acerax::Config config = resolve(sweep_opts, sweep);
      // ';' separates list-valued entries such as hidden sizes
      const char sep = values_text.find(';') != std::string::npos ? ';' : ',';
      std::string item;
      for (char ch : values_text + sep) {
        if (ch == sep) {
          const auto t = acerax::detail::trim(item);
          if (!t.empty()) spec.values.emplace_back(t);
          item.clear();
        } else {
          item += ch;
        }
      }
      spec.seeds = seeds;
      return acerax::cmd_sweep(config, spec, acerax::output_root(sweep_opts.out), std::cout, std::cerr);
    }
    if (eval->parsed()) {
      const acerax::Config config = resolve(eval_opts, eval);
      return acerax::cmd_eval(config, checkpoint, episodes, acerax::output_root(eval_opts.out), std::cout, std::cerr);
    }
    const acerax::Config config = resolve(grad_opts, grad);
    gopts.seed = config.seed;
    return acerax::cmd_gradcheck(config, gopts, std::cout, std::cerr);
  } catch (const acerax::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const acerax::load_error& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
