#pragma once

#include <cstddef>
#include <optional>

#include "ragan/nn.hpp"
#include "ragan/rng.hpp"
#include "ragan/tape.hpp"

namespace ragan::adversarial {

using nn::Matrix;
using nn::Vector;

/// Conditional input of the generator plus its latent draw.
///
/// `conditional` starts with the 2n-wide data signal x; in pilot mode the
/// received pilot follows it.
struct GeneratorInput {
  Vector conditional;
  Vector z;
};

/// Channel surrogate: generator G and discriminator D.
///
/// G: [conditional | z] -> 8M ELU -> 8M tanh -> 2n linear.
/// D: frame -> 2M ELU -> 2M ELU -> 1 sigmoid.
/// In residual mode G's network learns y~ - x and the skip connection adds x.
struct AdversarialPair {
  nn::ParamStore generator;
  nn::ParamStore discriminator;
  bool residual = false;
  std::size_t signal_width = 0;  // 2n
  std::size_t side_width = 0;    // 2n with pilots, else 0
  std::size_t latent_dim = 0;    // 2n

  std::size_t conditional_width() const { return signal_width + side_width; }
  std::size_t frame_width() const { return signal_width + side_width; }
};

/// G and D for alphabet M and n channel uses; latent width 2n.
AdversarialPair make_adversarial_pair(std::size_t M, std::size_t n, bool pilot, bool residual);

/// Standard-normal latent row(s).
Vector draw_latent(std::size_t dim, Rng& rng);
Matrix draw_latent(std::size_t rows, std::size_t dim, Rng& rng);

/// Conditional input with a freshly drawn z.
GeneratorInput make_input(const AdversarialPair& pair, Vector conditional, Rng& rng);

/// Output of G's network alone, f(concat(conditional, z)).
Vector generator_body(const AdversarialPair& pair, const GeneratorInput& gin);

/// Conventional generator: y~ = f(concat(conditional, z)).
/// Throws ContractError on a residual pair.
Vector generator_forward(const AdversarialPair& pair, const GeneratorInput& gin);
Vector generator_forward(const AdversarialPair& pair, const Vector& conditional, Rng& rng);

/// Residual generator: y~ = x + f(concat(conditional, z)).
/// Throws ContractError on a conventional pair.
Vector residual_generator_forward(const AdversarialPair& pair, const GeneratorInput& gin);
Vector residual_generator_forward(const AdversarialPair& pair, const Vector& conditional,
                                  Rng& rng);

/// Fake received signals for a batch, dispatching on the pair's mode.
/// `side` is empty without pilots.
Matrix generate_batch(const AdversarialPair& pair, const Matrix& signals, const Matrix& side,
                      const Matrix& latent);

/// Discriminator score in (0, 1).
double discriminator_forward(const AdversarialPair& pair, const Vector& candidate);

/// Which paths of the residual generator carry gradient back to x.
///   both      - the full derivative
///   body_only - x enters the skip connection as a constant
///   skip_only - x enters the network as a constant
/// For a fixed evaluation point, body_only + skip_only == both.
enum class SkipRoute { both, body_only, skip_only };

/// Taped generator. `side` is the received pilot in pilot mode.
nn::Var generate(nn::Tape& tape, AdversarialPair& pair, nn::Var signals,
                 std::optional<nn::Var> side, nn::Var latent, bool trainable,
                 SkipRoute route = SkipRoute::both);

/// Mean over the batch of -ln D(y) - ln(1 - D(y~)).
nn::Var discriminator_loss(nn::Tape& tape, AdversarialPair& pair, nn::Var real_frames,
                           nn::Var fake_frames, bool trainable = true);

/// Mean over the batch of -ln D(y~); D is held fixed.
nn::Var generator_loss(nn::Tape& tape, AdversarialPair& pair, nn::Var fake_frames);

/// base + lambda * 0.5 * ||theta||^2 over the one store being trained.
nn::Var regularized_loss(nn::Tape& tape, nn::Var base, nn::ParamStore& store, double lambda);

}  // namespace ragan::adversarial
