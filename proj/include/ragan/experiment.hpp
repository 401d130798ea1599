#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ragan/channels.hpp"
#include "ragan/comms.hpp"
#include "ragan/training.hpp"

namespace ragan::exp {

/// One experiment: a scheme trained on one channel, then a BLER sweep.
struct ExperimentConfig {
  training::Scheme scheme = training::Scheme::ra_gan;
  comms::LinkConfig link;  // link.ebn0_db is the training Eb/N0
  channels::ChannelKind channel = channels::ChannelKind::awgn;
  std::string dataset_path;
  std::vector<double> eval_grid;
  std::size_t eval_n = 100000;
  std::size_t valid_n = 10000;
  std::size_t epochs = 50;
  std::size_t train_size = 10000;
  double learning_rate = 1e-3;
  double sigma_p = 0.15;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

using Overrides = std::map<std::string, std::string>;

/// Parses flat "key = value" text; `#` starts a comment line. Override
/// entries replace file values. Unknown keys, malformed values and missing
/// required keys (scheme, channel, train_ebn0_db; dataset_path for dataset
/// channels) raise ConfigError naming the key.
///
/// Keys: scheme, channel, dataset_path, train_ebn0_db, eval_ebn0_db, M, n,
/// batch_size, n_train, lambda, pilot, epochs, learning_rate, sigma_p,
/// eval_n, valid_n, seed, out_dir.
///
/// eval_ebn0_db is either a comma list ("0, 2, 4") or "start:step:stop".
/// Defaults that depend on the channel: pilot is on for rayleigh/dataset,
/// epochs is 50 for awgn and 100 otherwise, and the grid is 0:1:8 for awgn
/// and 0:2:30 otherwise.
ExperimentConfig parse_config_text(const std::string& text, const Overrides& overrides = {});

/// Reads the file (an empty path means no file) and parses it. Throws
/// IoError when the file cannot be read.
ExperimentConfig parse_config(const std::filesystem::path& path, const Overrides& overrides = {});

struct CurvePoint {
  double ebn0_db = 0.0;
  double bler = 0.0;
  std::size_t trials = 0;
};

struct BlerCurve {
  std::vector<CurvePoint> points;
  training::Scheme scheme = training::Scheme::ra_gan;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  training::TrainResult trained;
  BlerCurve curve;
};

/// Channel model for the configuration; loads the dataset if needed.
channels::ChannelModel make_channel(const ExperimentConfig& cfg);

/// BLER at every grid point. Point i uses its own stream derived from
/// (seed, "eval-grid", i), so the result does not depend on `threads`.
BlerCurve evaluate_curve(const ExperimentConfig& cfg, const nn::ParamStore& transmitter,
                         const nn::ParamStore& receiver, const channels::ChannelModel& channel,
                         unsigned threads = 1);

/// Trains and evaluates without touching the filesystem.
ExperimentResult run_in_memory(const ExperimentConfig& cfg, unsigned threads = 1);

/// Trains, evaluates and writes losses.csv and bler.csv into cfg.out_dir.
/// On TrainingAbort an abort.txt diagnostic is written and the exception
/// is rethrown; no CSV is left behind.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 1);

inline constexpr const char* kLossesHeader =
    "epoch,loss_hat_r,loss_hat_t,loss_tilde_r,loss_tilde_t,loss_hat_g,loss_hat_d,"
    "penalty_r,penalty_t,penalty_g,penalty_d,bler";
inline constexpr const char* kBlerHeader = "ebn0_db,bler,trials,scheme,seed";

/// Writes losses.csv and bler.csv (sorted by ebn0_db), floats at 17
/// significant digits. Throws IoError when the directory is not writable.
void emit_csv(const training::TrainReport& report, const BlerCurve& curve,
              const std::filesystem::path& dir);

/// Round-trip readers for the two CSV files.
std::vector<training::EpochRecord> read_losses_csv(const std::filesystem::path& file);
BlerCurve read_bler_csv(const std::filesystem::path& file);

/// Formats a double at 17 significant digits, locale-independent.
std::string format_double(double value);

}  // namespace ragan::exp
