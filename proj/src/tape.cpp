#include "ragan/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ragan/errors.hpp"

namespace ragan::nn {

namespace {

// Gradient w.r.t. the pre-activation, given the activation output.
Matrix activation_backward(Activation act, const Matrix& out, const Matrix& g) {
  switch (act) {
    case Activation::relu:
      return (out.array() > 0.0).select(g.array(), 0.0).matrix();
    case Activation::elu:
      return (out.array() > 0.0).select(g.array(), g.array() * (out.array() + 1.0)).matrix();
    case Activation::tanh:
      return (g.array() * (1.0 - out.array().square())).matrix();
    case Activation::sigmoid:
      return (g.array() * out.array() * (1.0 - out.array())).matrix();
    case Activation::softmax: {
      const Vector dot = g.cwiseProduct(out).rowwise().sum();
      return (out.array() * (g.colwise() - dot).array()).matrix();
    }
    case Activation::linear:
      return g;
  }
  return g;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + " differ");
  }
}

double clamp_prob(double p) {
  return std::clamp(p, Tape::kProbClamp, 1.0 - Tape::kProbClamp);
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad,
               std::function<void(Tape&, std::size_t)> back) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(back)});
  return Var{nodes_.size() - 1};
}

void Tape::touch(ParamStore& store) {
  if (std::find(stores_.begin(), stores_.end(), &store) == stores_.end()) {
    stores_.push_back(&store);
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::dense(ParamStore& store, std::size_t layer, Var x, bool trainable) {
  touch(store);
  if (layer >= store.layer_count()) {
    throw ShapeError(store.name() + ": no layer " + std::to_string(layer));
  }
  const Matrix& input = value(x);
  if (input.cols() != store.in_dim(layer)) {
    throw ShapeError(store.name() + " layer " + std::to_string(layer) + ": expected input width " +
                     std::to_string(store.in_dim(layer)) + ", got " +
                     std::to_string(input.cols()));
  }
  Matrix out = input * store.weight(layer).transpose();
  out.rowwise() += store.bias(layer).transpose();
  const Activation act = store.activation(layer);
  activate_rows(act, out);

  ParamStore* target = &store;
  return push(std::move(out), trainable || needs(x),
              [target, layer, x, act, trainable](Tape& t, std::size_t self) {
                const Matrix pre_grad =
                    activation_backward(act, t.nodes_[self].value, t.nodes_[self].grad);
                if (trainable) {
                  target->weight_grad(layer).noalias() += pre_grad.transpose() * t.value(x);
                  target->bias_grad(layer) += pre_grad.colwise().sum().transpose();
                }
                if (t.needs(x)) t.grad_of(x).noalias() += pre_grad * target->weight(layer);
              });
}

Var Tape::network(ParamStore& store, Var x, bool trainable) {
  Var h = x;
  for (std::size_t i = 0; i < store.layer_count(); ++i) h = dense(store, i, h, trainable);
  return h;
}

Var Tape::activation(Activation act, Var x) {
  Matrix out = value(x);
  activate_rows(act, out);
  return push(std::move(out), needs(x), [x, act](Tape& t, std::size_t self) {
    t.grad_of(x) += activation_backward(act, t.nodes_[self].value, t.nodes_[self].grad);
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    if (t.needs(a)) t.grad_of(a) += t.nodes_[self].grad;
    if (t.needs(b)) t.grad_of(b) += t.nodes_[self].grad;
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    if (t.needs(a)) t.grad_of(a) += t.nodes_[self].grad;
    if (t.needs(b)) t.grad_of(b) -= t.nodes_[self].grad;
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), needs(a) || needs(b),
              [a, b](Tape& t, std::size_t self) {
                const Matrix& g = t.nodes_[self].grad;
                if (t.needs(a)) t.grad_of(a) += g.cwiseProduct(t.value(b));
                if (t.needs(b)) t.grad_of(b) += g.cwiseProduct(t.value(a));
              });
}

Var Tape::scale(Var a, double factor) {
  return push(factor * value(a), needs(a), [a, factor](Tape& t, std::size_t self) {
    t.grad_of(a) += factor * t.nodes_[self].grad;
  });
}

Var Tape::concat(Var a, Var b) {
  const Matrix& left = value(a);
  const Matrix& right = value(b);
  if (left.rows() != right.rows()) throw ShapeError("concat: row counts differ");
  Matrix out(left.rows(), left.cols() + right.cols());
  out << left, right;
  const Index split = left.cols();
  return push(std::move(out), needs(a) || needs(b), [a, b, split](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.grad_of(a) += g.leftCols(split);
    if (t.needs(b)) t.grad_of(b) += g.rightCols(g.cols() - split);
  });
}

Var Tape::normalize_rows(Var x, double target_norm) {
  const Matrix& in = value(x);
  Vector norms = in.rowwise().norm();
  for (Index r = 0; r < norms.size(); ++r) {
    if (!(norms[r] >= 1e-12)) {
      throw DegenerateSignalError("normalize_rows: row " + std::to_string(r) +
                                  " has norm below 1e-12");
    }
  }
  Matrix out = (in.array().colwise() * (target_norm / norms.array())).matrix();
  return push(std::move(out), needs(x),
              [x, norms = std::move(norms), target_norm](Tape& t, std::size_t self) {
                const Matrix& g = t.nodes_[self].grad;
                const Matrix unit = t.nodes_[self].value / target_norm;
                const Vector along = g.cwiseProduct(unit).rowwise().sum();
                Matrix tangent = g - (unit.array().colwise() * along.array()).matrix();
                t.grad_of(x) +=
                    (tangent.array().colwise() * (target_norm / norms.array())).matrix();
              });
}

Var Tape::complex_gain(Var x, std::span<const std::complex<double>> gains) {
  const Matrix& in = value(x);
  if (static_cast<Index>(gains.size()) != in.rows()) {
    throw ShapeError("complex_gain: one gain per row required");
  }
  if (in.cols() % 2 != 0) throw ShapeError("complex_gain: odd row width");
  Matrix out(in.rows(), in.cols());
  for (Index r = 0; r < in.rows(); ++r) {
    const double a = gains[r].real();
    const double b = gains[r].imag();
    for (Index c = 0; c < in.cols(); c += 2) {
      out(r, c) = a * in(r, c) - b * in(r, c + 1);
      out(r, c + 1) = b * in(r, c) + a * in(r, c + 1);
    }
  }
  std::vector<std::complex<double>> kept(gains.begin(), gains.end());
  return push(std::move(out), needs(x), [x, kept = std::move(kept)](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& gx = t.grad_of(x);
    for (Index r = 0; r < g.rows(); ++r) {
      const double a = kept[r].real();
      const double b = kept[r].imag();
      for (Index c = 0; c < g.cols(); c += 2) {
        gx(r, c) += a * g(r, c) + b * g(r, c + 1);
        gx(r, c + 1) += -b * g(r, c) + a * g(r, c + 1);
      }
    }
  });
}

Var Tape::row_sum(Var x) {
  Matrix out = value(x).rowwise().sum();
  return push(std::move(out), needs(x), [x](Tape& t, std::size_t self) {
    Matrix& gx = t.grad_of(x);
    gx.colwise() += t.nodes_[self].grad.col(0);
  });
}

Var Tape::mean(Var x) {
  const double count = static_cast<double>(value(x).size());
  Matrix out(1, 1);
  out(0, 0) = value(x).sum() / count;
  return push(std::move(out), needs(x), [x, count](Tape& t, std::size_t self) {
    t.grad_of(x).array() += t.nodes_[self].grad(0, 0) / count;
  });
}

Var Tape::binary_cross_entropy_rows(Var probs, const Matrix& targets) {
  const Matrix& p = value(probs);
  require_same_shape(p, targets, "binary_cross_entropy");
  Matrix out(p.rows(), 1);
  for (Index r = 0; r < p.rows(); ++r) {
    double total = 0.0;
    for (Index c = 0; c < p.cols(); ++c) {
      const double q = clamp_prob(p(r, c));
      const double t = targets(r, c);
      total -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
    }
    out(r, 0) = total;
  }
  return push(std::move(out), needs(probs), [probs, targets](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& p = t.value(probs);
    Matrix& gp = t.grad_of(probs);
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) {
        const double q = p(r, c);
        if (q < kProbClamp || q > 1.0 - kProbClamp) continue;
        const double tc = targets(r, c);
        gp(r, c) -= g(r, 0) * (tc / q - (1.0 - tc) / (1.0 - q));
      }
    }
  });
}

Var Tape::binary_cross_entropy(Var probs, const Matrix& targets) {
  return mean(binary_cross_entropy_rows(probs, targets));
}

Var Tape::l2_penalty(ParamStore& store, bool trainable) {
  touch(store);
  Matrix out(1, 1);
  out(0, 0) = nn::l2_penalty(store);
  ParamStore* target = &store;
  return push(std::move(out), trainable, [target](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad(0, 0);
    for (std::size_t i = 0; i < target->layer_count(); ++i) {
      target->weight_grad(i) += g * target->weight(i);
      target->bias_grad(i) += g * target->bias(i);
    }
  });
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ContractError("Tape::scalar: node is not 1x1");
  return m(0, 0);
}

void Tape::backward(Var output) {
  const Matrix& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("backward: output node is " + std::to_string(out.rows()) + "x" +
                        std::to_string(out.cols()) + ", expected a scalar");
  }
  for (ParamStore* store : stores_) store->zero_grad();
  for (auto& node : nodes_) {
    if (node.requires_grad) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  }
  if (!nodes_[output.id].requires_grad) return;
  nodes_[output.id].grad(0, 0) = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].back) nodes_[i].back(*this, i);
  }
}

}  // namespace ragan::nn
