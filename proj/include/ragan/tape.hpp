#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ragan/nn.hpp"

namespace ragan::nn {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id;
};

/// Define-by-run reverse-mode differentiation over batched matrices.
///
/// Every value is a matrix with one sample per row. Nodes are appended in
/// evaluation order, so replaying them backwards is a valid topological
/// order. Parameter stores enter through dense() and l2_penalty(); when
/// `trainable` is false the store acts as a constant and receives no
/// gradient. backward() zeroes the gradient slots of every store that
/// appeared on the tape before accumulating, so a store that did not
/// influence the output ends with exactly zero gradient.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  /// Differentiable input; its gradient is readable after backward().
  Var leaf(Matrix value);

  /// act(x W^T + b) for one layer of `store`.
  Var dense(ParamStore& store, std::size_t layer, Var x, bool trainable = true);

  /// All layers of `store` in sequence.
  Var network(ParamStore& store, Var x, bool trainable = true);

  Var activation(Activation act, Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);

  /// Column-wise concatenation [a | b]; rows must agree.
  Var concat(Var a, Var b);

  /// Rescales each row to Euclidean norm `target_norm`.
  /// Throws DegenerateSignalError when a row norm is below 1e-12.
  Var normalize_rows(Var x, double target_norm);

  /// Multiplies row i, read as interleaved (re, im) pairs, by gains[i].
  Var complex_gain(Var x, std::span<const std::complex<double>> gains);

  /// Per-row sum, giving a column.
  Var row_sum(Var x);

  /// Mean over every entry, giving a 1x1 scalar.
  Var mean(Var x);

  /// Batch mean of -sum_j [t_j ln p_j + (1 - t_j) ln(1 - p_j)], with p
  /// clamped to [1e-12, 1 - 1e-12]. Produces a 1x1 scalar.
  Var binary_cross_entropy(Var probs, const Matrix& targets);

  /// Same summand without the batch mean: one loss per row.
  Var binary_cross_entropy_rows(Var probs, const Matrix& targets);

  /// Half the squared norm of every parameter of `store`, as a 1x1 scalar.
  Var l2_penalty(ParamStore& store, bool trainable = true);

  /// Reverse sweep from a 1x1 node. Throws ContractError otherwise.
  void backward(Var output);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  static constexpr double kProbClamp = 1e-12;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> back;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&, std::size_t)> back);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& grad_of(Var v) { return nodes_[v.id].grad; }
  void touch(ParamStore& store);

  std::vector<Node> nodes_;
  std::vector<ParamStore*> stores_;
};

}  // namespace ragan::nn
