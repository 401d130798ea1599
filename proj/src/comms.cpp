#include "ragan/comms.hpp"

#include <cmath>
#include <string>

#include "ragan/errors.hpp"

namespace ragan::comms {

void LinkConfig::validate() const {
  if (M < 2) throw ConfigError("M must be at least 2");
  if (n < 1) throw ConfigError("n must be at least 1");
  if (batch < 1) throw ConfigError("batch size must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
}

Message encode_one_hot(std::size_t m, std::size_t M) {
  if (m >= M) {
    throw DomainError("message index " + std::to_string(m) + " outside [0, " +
                      std::to_string(M) + ")");
  }
  Vector onehot = Vector::Zero(static_cast<nn::Index>(M));
  onehot[static_cast<nn::Index>(m)] = 1.0;
  return Message{m, std::move(onehot)};
}

Matrix one_hot_batch(std::span<const std::size_t> messages, std::size_t M) {
  Matrix out = Matrix::Zero(static_cast<nn::Index>(messages.size()), static_cast<nn::Index>(M));
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (messages[i] >= M) throw DomainError("message index out of range");
    out(static_cast<nn::Index>(i), static_cast<nn::Index>(messages[i])) = 1.0;
  }
  return out;
}

Signal normalize_power(const Vector& v) {
  if (v.size() == 0 || v.size() % 2 != 0) {
    throw ShapeError("normalize_power: signal must have an even, non-zero length");
  }
  const double norm = v.norm();
  if (!(norm >= 1e-12)) throw DegenerateSignalError("normalize_power: signal norm below 1e-12");
  const double uses = static_cast<double>(v.size() / 2);
  return Signal{v * (std::sqrt(uses) / norm)};
}

nn::ParamStore make_transmitter(std::size_t M, std::size_t n) {
  const auto m = static_cast<nn::Index>(M);
  return nn::ParamStore("transmitter", m,
                        {{2 * m, nn::Activation::relu},
                         {2 * static_cast<nn::Index>(n), nn::Activation::linear}});
}

nn::ParamStore make_receiver(std::size_t M, std::size_t frame_width) {
  const auto m = static_cast<nn::Index>(M);
  return nn::ParamStore("receiver", static_cast<nn::Index>(frame_width),
                        {{4 * m, nn::Activation::relu}, {m, nn::Activation::softmax}});
}

namespace {

void check_transmitter(const nn::ParamStore& tx, nn::Index input_width) {
  if (tx.layer_count() != 2 || tx.activation(1) != nn::Activation::linear ||
      tx.output_width() % 2 != 0) {
    throw ShapeError("transmitter layout must be [M -> 2M relu -> 2n linear]");
  }
  if (tx.input_width() != input_width) {
    throw ShapeError("transmitter expects " + std::to_string(tx.input_width()) +
                     " message classes, got " + std::to_string(input_width));
  }
}

}  // namespace

Signal transmit(const nn::ParamStore& transmitter, const Message& msg) {
  check_transmitter(transmitter, msg.onehot.size());
  Vector h = msg.onehot;
  for (std::size_t i = 0; i < transmitter.layer_count(); ++i) {
    h = nn::dense_forward(transmitter, i, h);
  }
  return normalize_power(h);
}

Matrix transmit_batch(const nn::ParamStore& transmitter, const Matrix& onehots) {
  check_transmitter(transmitter, onehots.cols());
  Matrix raw = nn::forward(transmitter, onehots);
  const double target = std::sqrt(static_cast<double>(raw.cols() / 2));
  for (nn::Index r = 0; r < raw.rows(); ++r) {
    const double norm = raw.row(r).norm();
    if (!(norm >= 1e-12)) throw DegenerateSignalError("transmit: signal norm below 1e-12");
    raw.row(r) *= target / norm;
  }
  return raw;
}

nn::Var transmit(nn::Tape& tape, nn::ParamStore& transmitter, nn::Var onehots, bool trainable) {
  check_transmitter(transmitter, tape.value(onehots).cols());
  const nn::Var raw = tape.network(transmitter, onehots, trainable);
  return tape.normalize_rows(raw, std::sqrt(static_cast<double>(transmitter.output_width() / 2)));
}

ProbVector receive(const nn::ParamStore& receiver, const Vector& frame) {
  if (frame.size() != receiver.input_width()) {
    throw ShapeError("receiver expects frame width " + std::to_string(receiver.input_width()) +
                     ", got " + std::to_string(frame.size()));
  }
  Matrix row = frame.transpose();
  return ProbVector{nn::forward(receiver, row).row(0).transpose()};
}

Matrix receive_batch(const nn::ParamStore& receiver, const Matrix& frames) {
  return nn::forward(receiver, frames);
}

std::size_t decide_row(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  std::size_t best = 0;
  for (nn::Index i = 1; i < p.size(); ++i) {
    if (p[i] > p[static_cast<nn::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::size_t decide(const ProbVector& p) { return decide_row(p.p.transpose()); }

double ebn0_to_noise_var(double ebn0_db, std::size_t M, std::size_t n) {
  if (M < 2 || n < 1) throw DomainError("ebn0_to_noise_var: need M >= 2 and n >= 1");
  const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
  return static_cast<double>(n) / (2.0 * ebn0 * std::log2(static_cast<double>(M)));
}

double bler(std::span<const std::size_t> decisions, std::span<const std::size_t> truths) {
  if (decisions.size() != truths.size()) {
    throw ContractError("bler: decisions and truths differ in length");
  }
  if (decisions.empty()) throw ContractError("bler: no trials");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) errors += decisions[i] != truths[i];
  return static_cast<double>(errors) / static_cast<double>(decisions.size());
}

}  // namespace ragan::comms
