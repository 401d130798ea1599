#include "ragan/adversarial.hpp"

#include <string>

#include "ragan/errors.hpp"

namespace ragan::adversarial {

AdversarialPair make_adversarial_pair(std::size_t M, std::size_t n, bool pilot, bool residual) {
  if (M < 2 || n < 1) throw ConfigError("adversarial pair needs M >= 2 and n >= 1");
  AdversarialPair pair;
  pair.residual = residual;
  pair.signal_width = 2 * n;
  pair.side_width = pilot ? 2 * n : 0;
  pair.latent_dim = 2 * n;

  const auto m = static_cast<nn::Index>(M);
  const auto gen_in = static_cast<nn::Index>(pair.conditional_width() + pair.latent_dim);
  pair.generator = nn::ParamStore(residual ? "residual-generator" : "generator", gen_in,
                                  {{8 * m, nn::Activation::elu},
                                   {8 * m, nn::Activation::tanh},
                                   {static_cast<nn::Index>(pair.signal_width),
                                    nn::Activation::linear}});
  pair.discriminator = nn::ParamStore("discriminator", static_cast<nn::Index>(pair.frame_width()),
                                      {{2 * m, nn::Activation::elu},
                                       {2 * m, nn::Activation::elu},
                                       {1, nn::Activation::sigmoid}});
  return pair;
}

Vector draw_latent(std::size_t dim, Rng& rng) {
  Vector z(static_cast<nn::Index>(dim));
  for (nn::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return z;
}

Matrix draw_latent(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix z(static_cast<nn::Index>(rows), static_cast<nn::Index>(dim));
  for (nn::Index r = 0; r < z.rows(); ++r) {
    for (nn::Index c = 0; c < z.cols(); ++c) z(r, c) = rng.normal();
  }
  return z;
}

GeneratorInput make_input(const AdversarialPair& pair, Vector conditional, Rng& rng) {
  return GeneratorInput{std::move(conditional), draw_latent(pair.latent_dim, rng)};
}

namespace {

void check_input(const AdversarialPair& pair, const GeneratorInput& gin) {
  if (static_cast<std::size_t>(gin.conditional.size()) != pair.conditional_width()) {
    throw ShapeError("generator expects conditional width " +
                     std::to_string(pair.conditional_width()) + ", got " +
                     std::to_string(gin.conditional.size()));
  }
  if (static_cast<std::size_t>(gin.z.size()) != pair.latent_dim) {
    throw ShapeError("generator expects latent width " + std::to_string(pair.latent_dim));
  }
}

}  // namespace

Vector generator_body(const AdversarialPair& pair, const GeneratorInput& gin) {
  check_input(pair, gin);
  Matrix row(1, gin.conditional.size() + gin.z.size());
  row << gin.conditional.transpose(), gin.z.transpose();
  return nn::forward(pair.generator, row).row(0).transpose();
}

Vector generator_forward(const AdversarialPair& pair, const GeneratorInput& gin) {
  if (pair.residual) throw ContractError("generator_forward called on a residual generator");
  return generator_body(pair, gin);
}

Vector generator_forward(const AdversarialPair& pair, const Vector& conditional, Rng& rng) {
  return generator_forward(pair, make_input(pair, conditional, rng));
}

Vector residual_generator_forward(const AdversarialPair& pair, const GeneratorInput& gin) {
  if (!pair.residual) {
    throw ContractError("residual_generator_forward called on a conventional generator");
  }
  Vector out = generator_body(pair, gin);
  out += gin.conditional.head(static_cast<nn::Index>(pair.signal_width));
  return out;
}

Vector residual_generator_forward(const AdversarialPair& pair, const Vector& conditional,
                                  Rng& rng) {
  return residual_generator_forward(pair, make_input(pair, conditional, rng));
}

Matrix generate_batch(const AdversarialPair& pair, const Matrix& signals, const Matrix& side,
                      const Matrix& latent) {
  if (static_cast<std::size_t>(side.cols()) != pair.side_width ||
      static_cast<std::size_t>(signals.cols()) != pair.signal_width) {
    throw ShapeError("generate_batch: conditional widths do not match the generator");
  }
  Matrix input(signals.rows(), signals.cols() + side.cols() + latent.cols());
  if (side.cols() > 0) {
    input << signals, side, latent;
  } else {
    input << signals, latent;
  }
  Matrix out = nn::forward(pair.generator, input);
  if (pair.residual) out += signals;
  return out;
}

double discriminator_forward(const AdversarialPair& pair, const Vector& candidate) {
  if (candidate.size() != pair.discriminator.input_width()) {
    throw ShapeError("discriminator expects width " +
                     std::to_string(pair.discriminator.input_width()) + ", got " +
                     std::to_string(candidate.size()));
  }
  Matrix row = candidate.transpose();
  return nn::forward(pair.discriminator, row)(0, 0);
}

nn::Var generate(nn::Tape& tape, AdversarialPair& pair, nn::Var signals,
                 std::optional<nn::Var> side, nn::Var latent, bool trainable, SkipRoute route) {
  if (side.has_value() != (pair.side_width > 0)) {
    throw ShapeError("generate: pilot side input does not match the generator");
  }
  nn::Var body_signal = signals;
  if (pair.residual && route == SkipRoute::skip_only) {
    body_signal = tape.constant(tape.value(signals));
  }
  nn::Var conditional = side ? tape.concat(body_signal, *side) : body_signal;
  const nn::Var body = tape.network(pair.generator, tape.concat(conditional, latent), trainable);
  if (!pair.residual) return body;

  nn::Var skip = signals;
  if (route == SkipRoute::body_only) skip = tape.constant(tape.value(signals));
  return tape.add(skip, body);
}

nn::Var discriminator_loss(nn::Tape& tape, AdversarialPair& pair, nn::Var real_frames,
                           nn::Var fake_frames, bool trainable) {
  const nn::Var on_real = tape.network(pair.discriminator, real_frames, trainable);
  const nn::Var on_fake = tape.network(pair.discriminator, fake_frames, trainable);
  const Matrix ones = Matrix::Ones(tape.value(on_real).rows(), 1);
  const Matrix zeros = Matrix::Zero(tape.value(on_fake).rows(), 1);
  if (ones.rows() != zeros.rows()) throw ContractError("discriminator_loss: batch sizes differ");
  return tape.add(tape.binary_cross_entropy(on_real, ones),
                  tape.binary_cross_entropy(on_fake, zeros));
}

nn::Var generator_loss(nn::Tape& tape, AdversarialPair& pair, nn::Var fake_frames) {
  const nn::Var on_fake = tape.network(pair.discriminator, fake_frames, false);
  return tape.binary_cross_entropy(on_fake, Matrix::Ones(tape.value(on_fake).rows(), 1));
}

nn::Var regularized_loss(nn::Tape& tape, nn::Var base, nn::ParamStore& store, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  return tape.add(base, tape.scale(tape.l2_penalty(store), lambda));
}

}  // namespace ragan::adversarial
