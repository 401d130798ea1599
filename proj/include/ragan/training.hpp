#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ragan/adversarial.hpp"
#include "ragan/channels.hpp"
#include "ragan/comms.hpp"
#include "ragan/nn.hpp"
#include "ragan/rng.hpp"
#include "ragan/tape.hpp"

namespace ragan::training {

using nn::Matrix;
using nn::Vector;

/// End-to-end training schemes.
///   optimal - transmitter gradient through the true channel
///   gan     - surrogate gradient through a conventional generator, no penalty
///   ra_gan  - residual generator with the L2-regularized losses
///   rl      - Gaussian-perturbation policy gradient for the transmitter
enum class Scheme { optimal, gan, ra_gan, rl };

/// Throws ConfigError on an unknown tag.
Scheme parse_scheme(std::string_view tag);
std::string_view to_string(Scheme scheme);

bool uses_generator(Scheme scheme);

/// Weight of the L2 penalty a scheme trains with. Only ra_gan is
/// regularized; the baselines use their original loss functions.
double effective_lambda(Scheme scheme, double lambda);

/// Loss of one step: the original loss and the weighted penalty.
struct StepLosses {
  double base = 0.0;
  double penalty = 0.0;

  double total() const { return base + penalty; }
};

/// Everything one inner iteration works on, drawn once and shared by the
/// D, G, R and T steps.
struct Minibatch {
  std::vector<std::size_t> messages;
  Matrix onehots;
  Matrix signals;
  channels::ChannelPass channel;
  Matrix latent;  // empty unless a generator is trained

  Matrix frames() const { return channel.frames(); }
};

Minibatch draw_minibatch(const nn::ParamStore& transmitter, const comms::LinkConfig& link,
                         const channels::ChannelModel& channel, Rng& message_rng,
                         Rng& channel_rng, Rng* latent_rng, std::size_t latent_dim);

/// Batch mean of the summed binary cross-entropy between p and the one-hot
/// targets.
nn::Var ce_loss(nn::Tape& tape, nn::Var probs, const Matrix& targets);

// The *_gradient functions leave the trained store's gradient slots filled
// and change no parameters; the matching *_step applies one Adam update.

StepLosses receiver_gradient(nn::ParamStore& receiver, const Minibatch& batch, double lambda);
StepLosses receiver_step(nn::ParamStore& receiver, const Minibatch& batch, double lambda,
                         const nn::AdamConfig& adam = {});

StepLosses transmitter_gradient_optimal(nn::ParamStore& transmitter, nn::ParamStore& receiver,
                                        const Minibatch& batch, double lambda);
StepLosses transmitter_step_optimal(nn::ParamStore& transmitter, nn::ParamStore& receiver,
                                    const Minibatch& batch, double lambda,
                                    const nn::AdamConfig& adam = {});

StepLosses transmitter_gradient_surrogate(
    nn::ParamStore& transmitter, adversarial::AdversarialPair& pair, nn::ParamStore& receiver,
    const Minibatch& batch, double lambda,
    adversarial::SkipRoute route = adversarial::SkipRoute::both);
StepLosses transmitter_step_surrogate(nn::ParamStore& transmitter,
                                      adversarial::AdversarialPair& pair,
                                      nn::ParamStore& receiver, const Minibatch& batch,
                                      double lambda, const nn::AdamConfig& adam = {});

/// Fake received frames of the batch under the current generator.
Matrix fake_frames(const adversarial::AdversarialPair& pair, const Minibatch& batch);

StepLosses discriminator_gradient(adversarial::AdversarialPair& pair, const Minibatch& batch,
                                  double lambda);
StepLosses generator_gradient(adversarial::AdversarialPair& pair, const Minibatch& batch,
                              double lambda);

struct GanLosses {
  StepLosses discriminator;
  StepLosses generator;
};

/// One discriminator step, then one generator step against the updated D.
GanLosses gan_steps(adversarial::AdversarialPair& pair, const Minibatch& batch, double lambda,
                    const nn::AdamConfig& adam = {});

/// Policy-gradient estimate for the transmitter.
///
/// Explores x' = sqrt(1 - s^2) x + s w with w ~ CN(0, I), sends x' through
/// the batch's channel realizations and noise, and uses the receiver's
/// per-message losses l_i as rewards:
///   grad ~ (1/B) sum_i (l_i - mean l) grad log pi(x'_i | x_i).
/// Throws ConfigError unless 0 < sigma < 1.
StepLosses transmitter_gradient_rl(nn::ParamStore& transmitter, nn::ParamStore& receiver,
                                   const Minibatch& batch, double sigma, Rng& rng,
                                   double lambda);
StepLosses transmitter_step_rl(nn::ParamStore& transmitter, nn::ParamStore& receiver,
                               const Minibatch& batch, double sigma, Rng& rng, double lambda,
                               const nn::AdamConfig& adam = {});

struct BlerPoint {
  double bler = 0.0;
  std::size_t trials = 0;
};

/// Monte-Carlo block error rate over `trials` uniform messages.
BlerPoint evaluate_bler(const nn::ParamStore& transmitter, const nn::ParamStore& receiver,
                        const comms::LinkConfig& link, const channels::ChannelModel& channel,
                        double ebn0_db, std::size_t trials, channels::Split split, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_hat_r = 0.0;
  double loss_hat_t = 0.0;
  double loss_tilde_r = 0.0;
  double loss_tilde_t = 0.0;
  double loss_hat_g = 0.0;
  double loss_hat_d = 0.0;
  double penalty_r = 0.0;
  double penalty_t = 0.0;
  double penalty_g = 0.0;
  double penalty_d = 0.0;
  double bler = 0.0;
};

/// Epoch values are means over that epoch's inner iterations, taken from
/// the forward pass of each step.
struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t iterations_per_epoch = 0;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  Scheme scheme = Scheme::ra_gan;
  std::size_t epochs = 50;
  std::size_t train_size = 10000;
  std::size_t validation_size = 10000;
  nn::AdamConfig adam{};
  double sigma_p = 0.15;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  nn::ParamStore transmitter;
  nn::ParamStore receiver;
  std::optional<adversarial::AdversarialPair> adversarial;
  TrainReport report;
};

/// Runs floor(train_size / batch) inner iterations per epoch. Each draws B
/// messages, their signals, B channel realizations and the received frames,
/// then steps D, G, R, T in that order (only R, T for optimal and rl).
/// Throws TrainingAbort on a non-finite loss.
TrainResult train(const TrainOptions& options, const comms::LinkConfig& link,
                  const channels::ChannelModel& channel, RngStreams& streams);

}  // namespace ragan::training
