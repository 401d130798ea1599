#include "ragan/nn.hpp"

#include <cmath>
#include <cstring>

#include "ragan/errors.hpp"

namespace ragan::nn {

Activation parse_activation(std::string_view tag) {
  if (tag == "relu") return Activation::relu;
  if (tag == "elu") return Activation::elu;
  if (tag == "tanh") return Activation::tanh;
  if (tag == "sigmoid") return Activation::sigmoid;
  if (tag == "softmax") return Activation::softmax;
  if (tag == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + std::string(tag) + "'");
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    case Activation::linear: return "linear";
  }
  return "?";
}

void activate_rows(Activation act, Matrix& batch) {
  switch (act) {
    case Activation::relu:
      batch = batch.cwiseMax(0.0);
      break;
    case Activation::elu:
      batch = batch.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
      break;
    case Activation::tanh:
      batch = batch.array().tanh().matrix();
      break;
    case Activation::sigmoid:
      batch = batch.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
      break;
    case Activation::softmax:
      for (Index r = 0; r < batch.rows(); ++r) {
        auto row = batch.row(r);
        const double peak = row.maxCoeff();
        row = (row.array() - peak).exp().matrix();
        row /= row.sum();
      }
      break;
    case Activation::linear:
      break;
  }
}

Vector activation_apply(Activation act, const Vector& v) {
  if (act == Activation::softmax && v.size() == 0) {
    throw ContractError("softmax of an empty vector");
  }
  Matrix row = v.transpose();
  activate_rows(act, row);
  return row.transpose();
}

ParamStore::ParamStore(std::string name, Index input_width,
                       const std::vector<LayerSpec>& layers)
    : name_(std::move(name)) {
  if (layers.empty()) throw ConfigError(name_ + ": network without layers");
  Index in = input_width;
  for (const auto& spec : layers) {
    if (in < 1 || spec.out < 1) {
      throw ConfigError(name_ + ": zero layer dimension");
    }
    params_.push_back({Matrix::Zero(spec.out, in), Vector::Zero(spec.out)});
    acts_.push_back(spec.act);
    in = spec.out;
  }
  grads_ = zeros_like(params_);
  adam_m_ = zeros_like(params_);
  adam_v_ = zeros_like(params_);
}

std::vector<ParamStore::Slot> ParamStore::zeros_like(const std::vector<Slot>& slots) {
  std::vector<Slot> out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    out.push_back({Matrix::Zero(s.weight.rows(), s.weight.cols()),
                   Vector::Zero(s.bias.size())});
  }
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t count = 0;
  for (const auto& s : params_) count += s.weight.size() + s.bias.size();
  return count;
}

void ParamStore::zero_grad() {
  for (auto& g : grads_) {
    g.weight.setZero();
    g.bias.setZero();
  }
}

namespace {

template <typename Slots>
Vector flatten_slots(const Slots& slots, std::size_t count) {
  Vector flat(static_cast<Index>(count));
  Index k = 0;
  for (const auto& s : slots) {
    for (Index r = 0; r < s.weight.rows(); ++r) {
      for (Index c = 0; c < s.weight.cols(); ++c) flat[k++] = s.weight(r, c);
    }
    for (Index i = 0; i < s.bias.size(); ++i) flat[k++] = s.bias[i];
  }
  return flat;
}

}  // namespace

Vector ParamStore::flatten() const { return flatten_slots(params_, parameter_count()); }

Vector ParamStore::flatten_grad() const { return flatten_slots(grads_, parameter_count()); }

void ParamStore::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ShapeError(name_ + ": flat parameter vector has wrong length");
  }
  Index k = 0;
  for (auto& s : params_) {
    for (Index r = 0; r < s.weight.rows(); ++r) {
      for (Index c = 0; c < s.weight.cols(); ++c) s.weight(r, c) = flat[k++];
    }
    for (Index i = 0; i < s.bias.size(); ++i) s.bias[i] = flat[k++];
  }
}

double ParamStore::squared_norm() const {
  double total = 0.0;
  for (const auto& s : params_) total += s.weight.squaredNorm() + s.bias.squaredNorm();
  return total;
}

std::uint64_t ParamStore::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](const double* data, Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : params_) {
    mix(s.weight.data(), s.weight.size());
    mix(s.bias.data(), s.bias.size());
  }
  return hash;
}

Matrix xavier_uniform(Index out, Index in, Rng& rng) {
  if (out < 1 || in < 1) throw ConfigError("xavier_uniform: zero dimension");
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(out, in);
  for (Index r = 0; r < out; ++r) {
    for (Index c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

void xavier_init(ParamStore& store, Rng& rng) {
  for (std::size_t i = 0; i < store.layer_count(); ++i) {
    store.weight(i) = xavier_uniform(store.out_dim(i), store.in_dim(i), rng);
    store.bias(i).setZero();
  }
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  ++store.steps_;
  const double t = static_cast<double>(store.steps_);
  const double correct1 = 1.0 - std::pow(cfg.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg.lr * (m.array() / correct1) /
                     ((v.array() / correct2).sqrt() + cfg.eps);
  };
  for (std::size_t i = 0; i < store.params_.size(); ++i) {
    update(store.params_[i].weight, store.grads_[i].weight, store.adam_m_[i].weight,
           store.adam_v_[i].weight);
    update(store.params_[i].bias, store.grads_[i].bias, store.adam_m_[i].bias,
           store.adam_v_[i].bias);
  }
}

double l2_penalty(const ParamStore& store) { return 0.5 * store.squared_norm(); }

Vector dense_forward(const ParamStore& store, std::size_t layer, const Vector& input) {
  if (layer >= store.layer_count()) {
    throw ShapeError(store.name() + ": no layer " + std::to_string(layer));
  }
  if (input.size() != store.in_dim(layer)) {
    throw ShapeError(store.name() + " layer " + std::to_string(layer) + ": expected input width " +
                     std::to_string(store.in_dim(layer)) + ", got " +
                     std::to_string(input.size()));
  }
  Vector pre = store.weight(layer) * input + store.bias(layer);
  return activation_apply(store.activation(layer), pre);
}

Matrix forward(const ParamStore& store, const Matrix& batch) {
  if (batch.cols() != store.input_width()) {
    throw ShapeError(store.name() + ": expected input width " +
                     std::to_string(store.input_width()) + ", got " +
                     std::to_string(batch.cols()));
  }
  Matrix h = batch;
  for (std::size_t i = 0; i < store.layer_count(); ++i) {
    Matrix pre = h * store.weight(i).transpose();
    pre.rowwise() += store.bias(i).transpose();
    activate_rows(store.activation(i), pre);
    h = std::move(pre);
  }
  return h;
}

}  // namespace ragan::nn
