#include "advlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "advlab/errors.hpp"

namespace advlab {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be a matrix, got shape " +
                         shape_to_string(t.shape()));
  }
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (const std::size_t dim : shape_) {
    if (dim == 0) throw DimensionError("zero-sized dimension in shape " + shape_to_string(shape_));
  }
  if (data_.size() != product(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_to_string(shape_));
  }
  for (const double v : data_) {
    if (!std::isfinite(v)) throw ParameterError("tensor entries must be finite");
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> data) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

std::size_t Tensor::rows() const { return shape_.empty() ? 0 : shape_[0]; }

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return 1;
  return data_.size() / shape_[0];
}

std::span<const double> Tensor::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * cols(), cols());
}

std::span<double> Tensor::mutable_row(std::size_t i) {
  return std::span<double>(data_).subspan(i * cols(), cols());
}

std::string to_string(Activation kind) { return kind == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ParameterError("unknown activation '" + name + "' (expected relu or tanh)");
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_matrix(input, "linear input");
  require_matrix(weight, "linear weight");
  if (input.shape()[1] != weight.shape()[0] || bias.rank() != 1 ||
      bias.shape()[0] != weight.shape()[1]) {
    throw DimensionError("linear: input " + shape_to_string(input.shape()) + " incompatible with weight " +
                         shape_to_string(weight.shape()) + " and bias " + shape_to_string(bias.shape()));
  }
  const std::size_t n = input.shape()[0];
  const std::size_t d = weight.shape()[0];
  const std::size_t m = weight.shape()[1];
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.data() + i * m;
    std::copy(bias.data().begin(), bias.data().end(), out_row);
    for (std::size_t k = 0; k < d; ++k) {
      const double a = input.at(i, k);
      const double* w_row = weight.data().data() + k * m;
      for (std::size_t j = 0; j < m; ++j) out_row[j] += a * w_row[j];
    }
  }
  return Tensor({n, m}, std::move(out));
}

Tensor activate(const Tensor& input, Activation kind) {
  std::vector<double> out(input.data().begin(), input.data().end());
  if (kind == Activation::relu) {
    for (double& v : out) v = v > 0.0 ? v : 0.0;
  } else {
    for (double& v : out) v = std::tanh(v);
  }
  return Tensor(input.shape(), std::move(out));
}

Tensor scaled_softmax(const Tensor& logits, double alpha) {
  require_matrix(logits, "logits");
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  const std::size_t n = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  std::vector<double> probs(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    // Max-subtraction after scaling keeps exp() in range for large alpha.
    double top = alpha * z[0];
    for (std::size_t k = 1; k < c; ++k) top = std::max(top, alpha * z[k]);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      probs[i * c + k] = std::exp(alpha * z[k] - top);
      total += probs[i * c + k];
    }
    for (std::size_t k = 0; k < c; ++k) probs[i * c + k] /= total;
  }
  return Tensor({n, c}, std::move(probs));
}

std::vector<double> scaled_softmax_cross_entropy(const Tensor& logits, std::span<const Label> labels,
                                                 double alpha) {
  require_matrix(logits, "logits");
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive, got " + std::to_string(alpha));
  const std::size_t n = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  if (labels.size() != n) {
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                         " logit rows");
  }
  std::vector<double> losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw IndexError("label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    }
    const auto z = logits.row(i);
    double top = alpha * z[0];
    for (std::size_t k = 1; k < c; ++k) top = std::max(top, alpha * z[k]);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) total += std::exp(alpha * z[k] - top);
    losses[i] = std::log(total) - (alpha * z[static_cast<std::size_t>(y)] - top);
  }
  return losses;
}

std::vector<Label> argmax_rows(const Tensor& logits) {
  require_matrix(logits, "logits");
  const std::size_t n = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  std::vector<Label> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (z[k] > z[best]) best = k;
    }
    out[i] = static_cast<Label>(best);
  }
  return out;
}

bool Gradient::has(Var leaf) const { return leaf.id < grads_.size() && grads_[leaf.id].has_value(); }

const Tensor& Gradient::operator[](Var leaf) const {
  if (!has(leaf)) throw ContractError("no gradient recorded for tape node " + std::to_string(leaf.id));
  return *grads_[leaf.id];
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::leaf(Tensor value) {
  Node n{Op::leaf, std::move(value)};
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) { return push(Node{Op::constant, std::move(value)}); }

Var Tape::linear(Var input, Var weight, Var bias) {
  Node n{Op::linear, advlab::linear(value(input), value(weight), value(bias)), {input.id, weight.id, bias.id}};
  n.requires_grad = node(input).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
  return push(std::move(n));
}

Var Tape::activation(Var input, Activation kind) {
  Node n{Op::activation, activate(value(input), kind), {input.id}};
  n.kind = kind;
  n.requires_grad = node(input).requires_grad;
  return push(std::move(n));
}

Var Tape::scaled_softmax_cross_entropy(Var logits, std::span<const Label> labels, double alpha) {
  const Tensor& z = value(logits);
  std::vector<double> losses = advlab::scaled_softmax_cross_entropy(z, labels, alpha);
  Node n{Op::cross_entropy, Tensor::vector(std::move(losses)), {logits.id}};
  n.alpha = alpha;
  n.labels.assign(labels.begin(), labels.end());
  n.probabilities = scaled_softmax(z, alpha);
  n.requires_grad = node(logits).requires_grad;
  return push(std::move(n));
}

Var Tape::weighted_mean(Var values, std::span<const double> weights) {
  const Tensor& v = value(values);
  if (v.rank() != 1 || v.size() != weights.size()) {
    throw DimensionError("weighted_mean: values " + shape_to_string(v.shape()) + " vs " +
                         std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += weights[i] * v[i];
  Node n{Op::weighted_mean, Tensor({1}, {total / static_cast<double>(v.size())}), {values.id}};
  n.weights.assign(weights.begin(), weights.end());
  n.requires_grad = node(values).requires_grad;
  return push(std::move(n));
}

Var Tape::sum(Var values) {
  const Tensor& v = value(values);
  double total = 0.0;
  for (const double x : v.data()) total += x;
  Node n{Op::sum, Tensor({1}, {total}), {values.id}};
  n.requires_grad = node(values).requires_grad;
  return push(std::move(n));
}

Gradient Tape::backward(Var loss) const {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + shape_to_string(root.value.shape()));
  }

  std::vector<std::vector<double>> adjoint(loss.id + 1);
  adjoint[loss.id] = {1.0};

  const auto accumulate = [&](std::size_t target, std::size_t size) -> std::vector<double>& {
    auto& slot = adjoint[target];
    if (slot.empty()) slot.assign(size, 0.0);
    return slot;
  };

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || adjoint[id].empty()) continue;
    const std::vector<double>& upstream = adjoint[id];

    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;

      case Op::linear: {
        const Node& in = nodes_[n.operands[0]];
        const Node& w = nodes_[n.operands[1]];
        const Node& b = nodes_[n.operands[2]];
        const std::size_t rows = in.value.shape()[0];
        const std::size_t d = w.value.shape()[0];
        const std::size_t m = w.value.shape()[1];
        if (in.requires_grad) {
          auto& g = accumulate(n.operands[0], rows * d);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
              double acc = 0.0;
              for (std::size_t j = 0; j < m; ++j) acc += upstream[i * m + j] * w.value.at(k, j);
              g[i * d + k] += acc;
            }
          }
        }
        if (w.requires_grad) {
          auto& g = accumulate(n.operands[1], d * m);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
              const double a = in.value.at(i, k);
              for (std::size_t j = 0; j < m; ++j) g[k * m + j] += a * upstream[i * m + j];
            }
          }
        }
        if (b.requires_grad) {
          auto& g = accumulate(n.operands[2], m);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < m; ++j) g[j] += upstream[i * m + j];
          }
        }
        break;
      }

      case Op::activation: {
        const Node& in = nodes_[n.operands[0]];
        auto& g = accumulate(n.operands[0], in.value.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (n.kind == Activation::relu) {
            // Subgradient 0 at exactly 0.
            if (in.value[k] > 0.0) g[k] += upstream[k];
          } else {
            const double t = n.value[k];
            g[k] += upstream[k] * (1.0 - t * t);
          }
        }
        break;
      }

      case Op::cross_entropy: {
        const std::size_t rows = n.probabilities.shape()[0];
        const std::size_t c = n.probabilities.shape()[1];
        auto& g = accumulate(n.operands[0], rows * c);
        for (std::size_t i = 0; i < rows; ++i) {
          const auto y = static_cast<std::size_t>(n.labels[i]);
          for (std::size_t k = 0; k < c; ++k) {
            const double target = k == y ? 1.0 : 0.0;
            g[i * c + k] += upstream[i] * n.alpha * (n.probabilities.at(i, k) - target);
          }
        }
        break;
      }

      case Op::weighted_mean: {
        const std::size_t count = n.weights.size();
        auto& g = accumulate(n.operands[0], count);
        for (std::size_t i = 0; i < count; ++i) {
          g[i] += upstream[0] * n.weights[i] / static_cast<double>(count);
        }
        break;
      }

      case Op::sum: {
        const std::size_t count = nodes_[n.operands[0]].value.size();
        auto& g = accumulate(n.operands[0], count);
        for (std::size_t i = 0; i < count; ++i) g[i] += upstream[0];
        break;
      }
    }
  }

  Gradient result;
  result.grads_.resize(loss.id + 1);
  for (std::size_t id = 0; id <= loss.id; ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::leaf) continue;
    std::vector<double> g = adjoint[id].empty() ? std::vector<double>(n.value.size(), 0.0)
                                                : std::move(adjoint[id]);
    result.grads_[id] = Tensor(n.value.shape(), std::move(g));
  }
  return result;
}

}  // namespace advlab
