// Experiment runner.
//
//   ragan train --config <path> [--seed N] [--scheme S] [--out DIR]
//               [--eval-n N] [--epochs N] [--set key=value]... [--threads N]
//   ragan synth-dataset --out <file> [--users N] [--subcarriers K]
//               [--paths L] [--seed N]
//
// Exit codes: 0 ok, 1 configuration error, 2 training abort, 3 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ragan/channels.hpp"
#include "ragan/errors.hpp"
#include "ragan/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kTrainingAbort = 2, kIoError = 3 };

int run_train(const std::string& config_path, const ragan::exp::Overrides& overrides,
              unsigned threads, bool quiet) {
  ragan::exp::ExperimentConfig cfg;
  try {
    cfg = ragan::exp::parse_config(config_path, overrides);
  } catch (const ragan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ragan::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
  try {
    ragan::exp::ExperimentConfig run = cfg;
    const auto result = ragan::exp::run_experiment(run, threads);
    if (!quiet) {
      for (const auto& p : result.curve.points) {
        std::printf("%6.2f dB  bler %.6g  (%zu trials)\n", p.ebn0_db, p.bler, p.trials);
      }
      std::printf("trained in %.1f s; wrote %s/losses.csv and bler.csv\n",
                  result.trained.report.wall_seconds, cfg.out_dir.string().c_str());
    }
    return kOk;
  } catch (const ragan::TrainingAbort& e) {
    std::cerr << "training aborted: " << e.what() << " (see " << (cfg.out_dir / "abort.txt").string()
              << ")\n";
    return kTrainingAbort;
  } catch (const ragan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ragan::LoadError& e) {
    std::cerr << "channel file error: " << e.what() << "\n";
    return kIoError;
  } catch (const ragan::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"End-to-end learned link trainer"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train one scheme and sweep BLER over Eb/N0");
  std::string config_path;
  std::string scheme;
  std::string out_dir;
  std::string seed;
  std::string eval_n;
  std::string epochs;
  std::vector<std::string> sets;
  unsigned threads = 1;
  bool quiet = false;
  train->add_option("--config", config_path, "Flat key = value configuration file")->required();
  train->add_option("--seed", seed, "Master seed");
  train->add_option("--scheme", scheme, "optimal | gan | ra-gan | rl");
  train->add_option("--out", out_dir, "Output directory for the CSV files");
  train->add_option("--eval-n", eval_n, "Messages per Eb/N0 grid point");
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--set", sets, "Override any configuration key, as key=value");
  train->add_option("--threads", threads, "Worker threads for the BLER sweep");
  train->add_flag("--quiet", quiet, "Print nothing on success");

  auto* synth = app.add_subcommand("synth-dataset", "Write a synthetic multipath channel file");
  std::string synth_out;
  std::size_t users = 200;
  std::size_t subcarriers = 64;
  std::size_t paths = 5;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Output channel file")->required();
  synth->add_option("--users", users, "Number of users");
  synth->add_option("--subcarriers", subcarriers, "Subcarriers per user");
  synth->add_option("--paths", paths, "Propagation paths per user");
  synth->add_option("--seed", synth_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*train) {
    ragan::exp::Overrides overrides;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "config error: --set expects key=value, got '" << kv << "'\n";
        return kConfigError;
      }
      overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!seed.empty()) overrides["seed"] = seed;
    if (!scheme.empty()) overrides["scheme"] = scheme;
    if (!out_dir.empty()) overrides["out_dir"] = out_dir;
    if (!eval_n.empty()) overrides["eval_n"] = eval_n;
    if (!epochs.empty()) overrides["epochs"] = epochs;
    return run_train(config_path, overrides, threads, quiet);
  }

  try {
    ragan::Rng rng(ragan::derive_seed(synth_seed, "synth-dataset"));
    const auto samples = ragan::channels::synthesize_multipath(users, subcarriers, paths, rng);
    ragan::channels::write_channel_file(synth_out, samples);
  } catch (const ragan::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
