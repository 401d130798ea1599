#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ragan/rng.hpp"

namespace ragan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Activation { relu, elu, tanh, sigmoid, softmax, linear };

/// Throws ConfigError on an unrecognized tag.
Activation parse_activation(std::string_view tag);
std::string_view to_string(Activation act);

/// Element-wise activation; softmax normalizes over the whole vector.
/// ELU uses alpha = 1.
Vector activation_apply(Activation act, const Vector& v);

/// Row-wise activation of a batch (one sample per row), in place.
void activate_rows(Activation act, Matrix& batch);

struct AdamConfig;

struct LayerSpec {
  Index out;
  Activation act;
};

/// Weights, gradients and Adam moments of one dense feed-forward network.
///
/// Layer i maps in_dim(i) -> out_dim(i) as act(W x + b), W being out x in.
/// The gradient and moment slots always mirror the parameter shapes.
class ParamStore {
 public:
  ParamStore() = default;

  /// Zero-initialized stack. Throws ConfigError on a zero dimension.
  ParamStore(std::string name, Index input_width, const std::vector<LayerSpec>& layers);

  const std::string& name() const { return name_; }
  std::size_t layer_count() const { return params_.size(); }
  Index in_dim(std::size_t layer) const { return params_.at(layer).weight.cols(); }
  Index out_dim(std::size_t layer) const { return params_.at(layer).weight.rows(); }
  Index input_width() const { return in_dim(0); }
  Index output_width() const { return out_dim(layer_count() - 1); }
  Activation activation(std::size_t layer) const { return acts_.at(layer); }

  Matrix& weight(std::size_t layer) { return params_.at(layer).weight; }
  const Matrix& weight(std::size_t layer) const { return params_.at(layer).weight; }
  Vector& bias(std::size_t layer) { return params_.at(layer).bias; }
  const Vector& bias(std::size_t layer) const { return params_.at(layer).bias; }

  Matrix& weight_grad(std::size_t layer) { return grads_.at(layer).weight; }
  const Matrix& weight_grad(std::size_t layer) const { return grads_.at(layer).weight; }
  Vector& bias_grad(std::size_t layer) { return grads_.at(layer).bias; }
  const Vector& bias_grad(std::size_t layer) const { return grads_.at(layer).bias; }

  std::size_t parameter_count() const;
  std::uint64_t step_count() const { return steps_; }

  void zero_grad();

  /// Parameters (or gradients) in layer order, weight row-major then bias.
  Vector flatten() const;
  Vector flatten_grad() const;
  void assign(const Vector& flat);

  /// Sum of squared parameter values.
  double squared_norm() const;

  /// FNV-1a hash over the raw parameter bytes; detects any mutation.
  std::uint64_t fingerprint() const;

  friend void adam_step(ParamStore& store, const AdamConfig& cfg);

 private:
  struct Slot {
    Matrix weight;
    Vector bias;
  };

  static std::vector<Slot> zeros_like(const std::vector<Slot>& slots);

  std::string name_;
  std::vector<Activation> acts_;
  std::vector<Slot> params_;
  std::vector<Slot> grads_;
  std::vector<Slot> adam_m_;
  std::vector<Slot> adam_v_;
  std::uint64_t steps_ = 0;
};

/// Glorot-uniform matrix on [-sqrt(6/(in+out)), +sqrt(6/(in+out))].
Matrix xavier_uniform(Index out, Index in, Rng& rng);

/// Xavier weights for every layer, biases reset to zero.
void xavier_init(ParamStore& store, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update from the store's gradient slots.
void adam_step(ParamStore& store, const AdamConfig& cfg = {});

/// Half the squared L2 norm of every weight and bias.
double l2_penalty(const ParamStore& store);

/// act(W x + b) for one layer. Throws ShapeError naming the layer on mismatch.
Vector dense_forward(const ParamStore& store, std::size_t layer, const Vector& input);

/// Whole network on a batch, one sample per row.
Matrix forward(const ParamStore& store, const Matrix& batch);

}  // namespace ragan::nn
