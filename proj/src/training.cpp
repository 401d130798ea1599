#include "ragan/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ragan/errors.hpp"

namespace ragan::training {

using adversarial::AdversarialPair;
using adversarial::SkipRoute;
using nn::ParamStore;
using nn::Tape;
using nn::Var;

Scheme parse_scheme(std::string_view tag) {
  if (tag == "optimal") return Scheme::optimal;
  if (tag == "gan") return Scheme::gan;
  if (tag == "ra-gan") return Scheme::ra_gan;
  if (tag == "rl") return Scheme::rl;
  throw ConfigError("unknown scheme '" + std::string(tag) + "'");
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::optimal: return "optimal";
    case Scheme::gan: return "gan";
    case Scheme::ra_gan: return "ra-gan";
    case Scheme::rl: return "rl";
  }
  return "?";
}

bool uses_generator(Scheme scheme) { return scheme == Scheme::gan || scheme == Scheme::ra_gan; }

double effective_lambda(Scheme scheme, double lambda) {
  return scheme == Scheme::ra_gan ? lambda : 0.0;
}

Minibatch draw_minibatch(const ParamStore& transmitter, const comms::LinkConfig& link,
                         const channels::ChannelModel& channel, Rng& message_rng,
                         Rng& channel_rng, Rng* latent_rng, std::size_t latent_dim) {
  Minibatch batch;
  batch.messages.resize(link.batch);
  for (auto& m : batch.messages) m = message_rng.index(link.M);
  batch.onehots = comms::one_hot_batch(batch.messages, link.M);
  batch.signals = comms::transmit_batch(transmitter, batch.onehots);
  const double noise_var = comms::ebn0_to_noise_var(link.ebn0_db, link.M, link.n);
  const auto reals = channel.draw(link.batch, noise_var, channels::Split::train, channel_rng);
  batch.channel = channels::propagate(batch.signals, reals, link.pilot, channel_rng);
  if (latent_rng != nullptr) batch.latent = adversarial::draw_latent(link.batch, latent_dim, *latent_rng);
  return batch;
}

Var ce_loss(Tape& tape, Var probs, const Matrix& targets) {
  return tape.binary_cross_entropy(probs, targets);
}

namespace {

// Closes the tape on base + lambda * penalty(store) and back-propagates.
StepLosses finish(Tape& tape, Var base, ParamStore& store, double lambda) {
  const Var penalty = tape.scale(tape.l2_penalty(store), lambda);
  const Var total = tape.add(base, penalty);
  tape.backward(total);
  return StepLosses{tape.scalar(base), tape.scalar(penalty)};
}

std::optional<Var> pilot_input(Tape& tape, const Minibatch& batch) {
  if (!batch.channel.has_pilot()) return std::nullopt;
  return tape.constant(batch.channel.received_pilot);
}

Var with_pilot(Tape& tape, std::optional<Var> pilot, Var data) {
  return pilot ? tape.concat(*pilot, data) : data;
}

}  // namespace

StepLosses receiver_gradient(ParamStore& receiver, const Minibatch& batch, double lambda) {
  Tape tape;
  const Var frames = tape.constant(batch.frames());
  const Var probs = tape.network(receiver, frames);
  return finish(tape, ce_loss(tape, probs, batch.onehots), receiver, lambda);
}

StepLosses receiver_step(ParamStore& receiver, const Minibatch& batch, double lambda,
                         const nn::AdamConfig& adam) {
  const StepLosses losses = receiver_gradient(receiver, batch, lambda);
  nn::adam_step(receiver, adam);
  return losses;
}

StepLosses transmitter_gradient_optimal(ParamStore& transmitter, ParamStore& receiver,
                                        const Minibatch& batch, double lambda) {
  Tape tape;
  const Var x = comms::transmit(tape, transmitter, tape.constant(batch.onehots));
  const Var y = tape.add(tape.complex_gain(x, batch.channel.gains),
                         tape.constant(batch.channel.noise));
  const Var frames = with_pilot(tape, pilot_input(tape, batch), y);
  const Var probs = tape.network(receiver, frames, false);
  return finish(tape, ce_loss(tape, probs, batch.onehots), transmitter, lambda);
}

StepLosses transmitter_step_optimal(ParamStore& transmitter, ParamStore& receiver,
                                    const Minibatch& batch, double lambda,
                                    const nn::AdamConfig& adam) {
  const StepLosses losses = transmitter_gradient_optimal(transmitter, receiver, batch, lambda);
  nn::adam_step(transmitter, adam);
  return losses;
}

StepLosses transmitter_gradient_surrogate(ParamStore& transmitter, AdversarialPair& pair,
                                          ParamStore& receiver, const Minibatch& batch,
                                          double lambda, SkipRoute route) {
  if (batch.latent.size() == 0) throw ContractError("surrogate step needs latent samples");
  Tape tape;
  const Var x = comms::transmit(tape, transmitter, tape.constant(batch.onehots));
  const auto pilot = pilot_input(tape, batch);
  const Var fake = adversarial::generate(tape, pair, x, pilot, tape.constant(batch.latent),
                                         false, route);
  const Var probs = tape.network(receiver, with_pilot(tape, pilot, fake), false);
  return finish(tape, ce_loss(tape, probs, batch.onehots), transmitter, lambda);
}

StepLosses transmitter_step_surrogate(ParamStore& transmitter, AdversarialPair& pair,
                                      ParamStore& receiver, const Minibatch& batch,
                                      double lambda, const nn::AdamConfig& adam) {
  const StepLosses losses =
      transmitter_gradient_surrogate(transmitter, pair, receiver, batch, lambda);
  nn::adam_step(transmitter, adam);
  return losses;
}

Matrix fake_frames(const AdversarialPair& pair, const Minibatch& batch) {
  const Matrix side = batch.channel.has_pilot() ? batch.channel.received_pilot
                                                : Matrix(batch.signals.rows(), 0);
  const Matrix fake = adversarial::generate_batch(pair, batch.signals, side, batch.latent);
  if (!batch.channel.has_pilot()) return fake;
  Matrix out(fake.rows(), side.cols() + fake.cols());
  out << side, fake;
  return out;
}

StepLosses discriminator_gradient(AdversarialPair& pair, const Minibatch& batch, double lambda) {
  Tape tape;
  const Var real = tape.constant(batch.frames());
  const Var fake = tape.constant(fake_frames(pair, batch));
  const Var loss = adversarial::discriminator_loss(tape, pair, real, fake);
  return finish(tape, loss, pair.discriminator, lambda);
}

StepLosses generator_gradient(AdversarialPair& pair, const Minibatch& batch, double lambda) {
  Tape tape;
  const auto pilot = pilot_input(tape, batch);
  const Var fake = adversarial::generate(tape, pair, tape.constant(batch.signals), pilot,
                                         tape.constant(batch.latent), true);
  const Var loss = adversarial::generator_loss(tape, pair, with_pilot(tape, pilot, fake));
  return finish(tape, loss, pair.generator, lambda);
}

GanLosses gan_steps(AdversarialPair& pair, const Minibatch& batch, double lambda,
                    const nn::AdamConfig& adam) {
  GanLosses out;
  out.discriminator = discriminator_gradient(pair, batch, lambda);
  nn::adam_step(pair.discriminator, adam);
  out.generator = generator_gradient(pair, batch, lambda);
  nn::adam_step(pair.generator, adam);
  return out;
}

StepLosses transmitter_gradient_rl(ParamStore& transmitter, ParamStore& receiver,
                                   const Minibatch& batch, double sigma, Rng& rng,
                                   double lambda) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("sigma_p must lie in (0, 1)");
  const double keep = std::sqrt(1.0 - sigma * sigma);
  const double sd = sigma * std::sqrt(0.5);

  Matrix explored = keep * batch.signals;
  for (nn::Index r = 0; r < explored.rows(); ++r) {
    for (nn::Index c = 0; c < explored.cols(); ++c) explored(r, c) += sd * rng.normal();
  }

  // Rewards: per-message receiver loss on the explored transmission.
  channels::ChannelPass pass = batch.channel;
  for (nn::Index r = 0; r < explored.rows(); ++r) {
    const auto h = pass.gains[static_cast<std::size_t>(r)];
    for (nn::Index c = 0; c < explored.cols(); c += 2) {
      const std::complex<double> s = h * std::complex<double>(explored(r, c), explored(r, c + 1));
      pass.received(r, c) = s.real() + pass.noise(r, c);
      pass.received(r, c + 1) = s.imag() + pass.noise(r, c + 1);
    }
  }
  Vector rewards;
  {
    Tape scratch;
    const Var probs = scratch.constant(comms::receive_batch(receiver, pass.frames()));
    rewards = scratch.value(scratch.binary_cross_entropy_rows(probs, batch.onehots)).col(0);
  }
  const double baseline = rewards.mean();
  Matrix advantage = (rewards.array() - baseline).matrix();

  Tape tape;
  const Var x = comms::transmit(tape, transmitter, tape.constant(batch.onehots));
  const Var diff = tape.sub(tape.constant(explored), tape.scale(x, keep));
  const Var log_pi = tape.scale(tape.row_sum(tape.mul(diff, diff)), -1.0 / (sigma * sigma));
  const Var surrogate = tape.mean(tape.mul(tape.constant(std::move(advantage)), log_pi));

  const Var penalty = tape.scale(tape.l2_penalty(transmitter), lambda);
  tape.backward(tape.add(surrogate, penalty));
  return StepLosses{baseline, tape.scalar(penalty)};
}

StepLosses transmitter_step_rl(ParamStore& transmitter, ParamStore& receiver,
                               const Minibatch& batch, double sigma, Rng& rng, double lambda,
                               const nn::AdamConfig& adam) {
  const StepLosses losses =
      transmitter_gradient_rl(transmitter, receiver, batch, sigma, rng, lambda);
  nn::adam_step(transmitter, adam);
  return losses;
}

BlerPoint evaluate_bler(const ParamStore& transmitter, const ParamStore& receiver,
                        const comms::LinkConfig& link, const channels::ChannelModel& channel,
                        double ebn0_db, std::size_t trials, channels::Split split, Rng& rng) {
  if (trials == 0) throw ContractError("evaluate_bler: no trials");
  constexpr std::size_t kChunk = 8192;
  const double noise_var = comms::ebn0_to_noise_var(ebn0_db, link.M, link.n);
  std::size_t errors = 0;
  std::vector<std::size_t> messages;
  for (std::size_t done = 0; done < trials; done += kChunk) {
    const std::size_t count = std::min(kChunk, trials - done);
    messages.resize(count);
    for (auto& m : messages) m = rng.index(link.M);
    const Matrix signals = comms::transmit_batch(transmitter, comms::one_hot_batch(messages, link.M));
    const auto reals = channel.draw(count, noise_var, split, rng);
    const auto pass = channels::propagate(signals, reals, link.pilot, rng);
    const Matrix probs = comms::receive_batch(receiver, pass.frames());
    for (std::size_t i = 0; i < count; ++i) {
      errors += comms::decide_row(probs.row(static_cast<nn::Index>(i))) != messages[i];
    }
  }
  return BlerPoint{static_cast<double>(errors) / static_cast<double>(trials), trials};
}

namespace {

void guard(const StepLosses& losses, const char* what, std::size_t epoch, std::size_t iter) {
  if (!std::isfinite(losses.base) || !std::isfinite(losses.penalty)) {
    throw TrainingAbort(epoch, iter,
                        std::string("non-finite ") + what + " loss at epoch " +
                            std::to_string(epoch) + ", iteration " + std::to_string(iter));
  }
}

}  // namespace

TrainResult train(const TrainOptions& options, const comms::LinkConfig& link,
                  const channels::ChannelModel& channel, RngStreams& streams) {
  link.validate();
  if (options.scheme == Scheme::rl && !(options.sigma_p > 0.0 && options.sigma_p < 1.0)) {
    throw ConfigError("sigma_p must lie in (0, 1)");
  }
  if (options.validation_size == 0) throw ConfigError("validation size must be positive");
  const auto started = std::chrono::steady_clock::now();
  const double lambda = effective_lambda(options.scheme, link.lambda);

  TrainResult result{comms::make_transmitter(link.M, link.n),
                     comms::make_receiver(link.M, link.frame_width()), std::nullopt, {}};
  nn::xavier_init(result.transmitter, streams.init);
  nn::xavier_init(result.receiver, streams.init);
  if (uses_generator(options.scheme)) {
    result.adversarial = adversarial::make_adversarial_pair(
        link.M, link.n, link.pilot, options.scheme == Scheme::ra_gan);
    nn::xavier_init(result.adversarial->generator, streams.init);
    nn::xavier_init(result.adversarial->discriminator, streams.init);
  }

  ParamStore& tx = result.transmitter;
  ParamStore& rx = result.receiver;
  const std::size_t iterations = options.train_size / link.batch;
  result.report.iterations_per_epoch = iterations;
  const Rng validation = streams.eval;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;
    for (std::size_t it = 0; it < iterations; ++it) {
      AdversarialPair* pair = result.adversarial ? &*result.adversarial : nullptr;
      const Minibatch batch =
          draw_minibatch(tx, link, channel, streams.messages, streams.channel,
                         pair ? &streams.latent : nullptr, pair ? pair->latent_dim : 0);
      if (pair) {
        const GanLosses gan = gan_steps(*pair, batch, lambda, options.adam);
        guard(gan.discriminator, "discriminator", rec.epoch, it);
        guard(gan.generator, "generator", rec.epoch, it);
        rec.loss_hat_d += gan.discriminator.total();
        rec.penalty_d += gan.discriminator.penalty;
        rec.loss_hat_g += gan.generator.total();
        rec.penalty_g += gan.generator.penalty;
      }

      const StepLosses r = receiver_step(rx, batch, lambda, options.adam);
      guard(r, "receiver", rec.epoch, it);

      StepLosses t;
      switch (options.scheme) {
        case Scheme::optimal:
          t = transmitter_step_optimal(tx, rx, batch, lambda, options.adam);
          break;
        case Scheme::gan:
        case Scheme::ra_gan:
          t = transmitter_step_surrogate(tx, *pair, rx, batch, lambda, options.adam);
          break;
        case Scheme::rl:
          t = transmitter_step_rl(tx, rx, batch, options.sigma_p, streams.explore, lambda,
                                  options.adam);
          break;
      }
      guard(t, "transmitter", rec.epoch, it);

      rec.loss_tilde_r += r.base;
      rec.loss_hat_r += r.total();
      rec.penalty_r += r.penalty;
      rec.loss_tilde_t += t.base;
      rec.loss_hat_t += t.total();
      rec.penalty_t += t.penalty;
    }
    if (iterations > 0) {
      const double k = static_cast<double>(iterations);
      for (double* v : {&rec.loss_hat_r, &rec.loss_hat_t, &rec.loss_tilde_r, &rec.loss_tilde_t,
                        &rec.loss_hat_g, &rec.loss_hat_d, &rec.penalty_r, &rec.penalty_t,
                        &rec.penalty_g, &rec.penalty_d}) {
        *v /= k;
      }
    }
    Rng eval_rng = validation;
    rec.bler = evaluate_bler(tx, rx, link, channel, link.ebn0_db, options.validation_size,
                             channels::Split::valid, eval_rng)
                   .bler;
    result.report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }

  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace ragan::training
