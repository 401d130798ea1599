#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ragan/nn.hpp"
#include "ragan/tape.hpp"

namespace ragan::comms {

using nn::Matrix;
using nn::Vector;

/// One of M messages and its one-hot encoding.
struct Message {
  std::size_t index = 0;
  Vector onehot;
};

/// n complex channel uses stored as 2n interleaved reals (re1, im1, ...).
struct Signal {
  Vector values;

  std::size_t uses() const { return static_cast<std::size_t>(values.size()) / 2; }
};

struct ProbVector {
  Vector p;
};

struct LinkConfig {
  std::size_t M = 16;
  std::size_t n = 7;
  double ebn0_db = 3.0;
  std::size_t batch = 320;
  double lambda = 0.01;
  bool pilot = false;

  /// Width of a received frame: 2n, or 4n with a pilot block in front.
  std::size_t frame_width() const { return pilot ? 4 * n : 2 * n; }

  /// Throws ConfigError on M < 2, n < 1, batch < 1 or lambda < 0.
  void validate() const;
};

Message encode_one_hot(std::size_t m, std::size_t M);

/// One-hot rows for a batch of message indices.
Matrix one_hot_batch(std::span<const std::size_t> messages, std::size_t M);

/// Scales v to squared norm n = v.size()/2, i.e. unit power per channel use.
/// Throws DegenerateSignalError when ||v|| < 1e-12.
Signal normalize_power(const Vector& v);

/// Transmitter layout: M -> 2M ReLU -> 2n linear (power normalization follows).
nn::ParamStore make_transmitter(std::size_t M, std::size_t n);

/// Receiver layout: frame_width -> 4M ReLU -> M softmax.
nn::ParamStore make_receiver(std::size_t M, std::size_t frame_width);

Signal transmit(const nn::ParamStore& transmitter, const Message& msg);

/// Normalized signals for a batch of one-hot rows.
Matrix transmit_batch(const nn::ParamStore& transmitter, const Matrix& onehots);

/// Taped transmitter forward including power normalization.
nn::Var transmit(nn::Tape& tape, nn::ParamStore& transmitter, nn::Var onehots,
                 bool trainable = true);

ProbVector receive(const nn::ParamStore& receiver, const Vector& frame);
Matrix receive_batch(const nn::ParamStore& receiver, const Matrix& frames);

/// Index of the largest probability; ties go to the lowest index.
std::size_t decide(const ProbVector& p);
std::size_t decide_row(const Eigen::Ref<const Eigen::RowVectorXd>& p);

/// Noise variance per complex channel use: n / (2 * 10^(EbN0/10) * log2 M).
double ebn0_to_noise_var(double ebn0_db, std::size_t M, std::size_t n);

/// Fraction of positions where decision != truth.
double bler(std::span<const std::size_t> decisions, std::span<const std::size_t> truths);

}  // namespace ragan::comms
