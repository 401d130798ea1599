#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragan/nn.hpp"
#include "ragan/rng.hpp"

namespace ragan::channels {

using Complex = std::complex<double>;
using nn::Matrix;
using nn::Vector;

/// Block-fading gain applied to all n uses of one message, plus the noise
/// variance per complex use.
struct ChannelRealization {
  Complex gain{1.0, 0.0};
  double noise_var = 0.0;
};

/// y = x + w with w ~ N(0, noise_var/2) per real component.
Vector awgn_apply(const Vector& x, double noise_var, Rng& rng);

/// h ~ CN(0, 1).
Complex rayleigh_sample(Rng& rng);

/// y = h x + w, complex multiply per channel use.
Vector fading_apply(const Vector& x, const ChannelRealization& real, Rng& rng);

/// Known pilot block: n uses of 1+0j (unit power per use).
Vector pilot_sequence(std::size_t n);

struct PilotFrame {
  Vector pilot;
  Vector received_pilot;
  Vector received_data;

  /// [received_pilot | received_data], width 4n.
  Vector frame() const;
};

/// Pilot noise is drawn before data noise; the two are independent.
PilotFrame make_pilot_frame(const Vector& x, const ChannelRealization& real, Rng& rng);

enum class Split { train, valid };

/// Scalar channel gains read from a text file, normalized to unit mean power
/// and split by row order: the first 80% train, the rest validation.
struct ChannelDataset {
  std::vector<Complex> samples;
  std::size_t train_count = 0;
  std::string source_path;
  double normalization_factor = 1.0;

  std::span<const Complex> train() const { return {samples.data(), train_count}; }
  std::span<const Complex> valid() const {
    return {samples.data() + train_count, samples.size() - train_count};
  }
  std::span<const Complex> split(Split s) const { return s == Split::train ? train() : valid(); }
};

/// Reads "re,im" rows; blank lines and lines starting with '#' are skipped.
/// Throws LoadError (missing_file, malformed_row, empty_file).
ChannelDataset dataset_load(const std::filesystem::path& path);

/// Builds a dataset from in-memory gains, applying the same normalization
/// and split as dataset_load.
ChannelDataset dataset_from_samples(std::vector<Complex> samples, std::string source = {});

/// B gains drawn uniformly with replacement from one split.
/// Throws ContractError when the split is empty.
std::vector<ChannelRealization> dataset_sample_batch(const ChannelDataset& ds, std::size_t batch,
                                                     Split split, double noise_var, Rng& rng);

/// Writes gains in the format dataset_load reads, at 17 significant digits.
/// Throws IoError when the file cannot be written.
void write_channel_file(const std::filesystem::path& path, std::span<const Complex> samples);

/// Frequency-domain gains of a sparse multipath channel, user by user.
///
/// Each user gets `paths` taps with CN(0, p_l) amplitudes (exponential power
/// profile p_l ~ e^-l) and delays uniform on [0, 8) samples; subcarrier k of
/// K = `subcarriers` sees h_k = sum_l a_l exp(-2 pi j k tau_l / K).
std::vector<Complex> synthesize_multipath(std::size_t users, std::size_t subcarriers,
                                          std::size_t paths, Rng& rng);

enum class ChannelKind { awgn, rayleigh, dataset };

ChannelKind parse_channel_kind(std::string_view tag);
std::string_view to_string(ChannelKind kind);

/// Source of per-message channel realizations for training and evaluation.
class ChannelModel {
 public:
  static ChannelModel awgn() { return ChannelModel(ChannelKind::awgn, nullptr); }
  static ChannelModel rayleigh() { return ChannelModel(ChannelKind::rayleigh, nullptr); }
  static ChannelModel dataset(std::shared_ptr<const ChannelDataset> ds);

  ChannelKind kind() const { return kind_; }
  const ChannelDataset* data() const { return dataset_.get(); }

  /// One realization per message. AWGN yields h = 1; the split only matters
  /// for dataset channels.
  std::vector<ChannelRealization> draw(std::size_t batch, double noise_var, Split split,
                                       Rng& rng) const;

 private:
  ChannelModel(ChannelKind kind, std::shared_ptr<const ChannelDataset> ds)
      : kind_(kind), dataset_(std::move(ds)) {}

  ChannelKind kind_;
  std::shared_ptr<const ChannelDataset> dataset_;
};

/// A batch of signals after the channel, with the noise kept so the data
/// path can be replayed differentiably as y = h x + noise.
struct ChannelPass {
  std::vector<Complex> gains;
  Matrix noise;
  Matrix received_pilot;  // empty without pilots
  Matrix received;

  bool has_pilot() const { return received_pilot.size() > 0; }

  /// Receiver input: [received_pilot | received] or just received.
  Matrix frames() const;
};

/// Sends each row of `signals` through its realization. Per row, pilot
/// noise (if any) is drawn before data noise.
ChannelPass propagate(const Matrix& signals, std::span<const ChannelRealization> reals,
                      bool with_pilot, Rng& rng);

}  // namespace ragan::channels
