#pragma once

// Dense float64 tensors and a small reverse-mode tape covering exactly the
// operations an MLP classifier with a logit-scaled cross-entropy needs.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advlab {

using Shape = std::vector<std::size_t>;
using Label = int;

std::string shape_to_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;

  // Validates length against the shape and rejects NaN/Inf entries.
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor vector(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  std::span<const double> row(std::size_t i) const;
  std::span<double> mutable_row(std::size_t i);

  double operator[](std::size_t k) const { return data_[k]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

enum class Activation { relu, tanh };

std::string to_string(Activation kind);
Activation parse_activation(const std::string& name);

// Untaped kernels. The tape below records these same computations.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor activate(const Tensor& input, Activation kind);
Tensor scaled_softmax(const Tensor& logits, double alpha);
std::vector<double> scaled_softmax_cross_entropy(const Tensor& logits,
                                                 std::span<const Label> labels, double alpha);
// Row-wise argmax, lowest index wins ties.
std::vector<Label> argmax_rows(const Tensor& logits);

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

class Gradient {
 public:
  bool has(Var leaf) const;
  const Tensor& operator[](Var leaf) const;

 private:
  friend class Tape;
  std::vector<std::optional<Tensor>> grads_;
};

class Tape {
 public:
  Var leaf(Tensor value);
  Var constant(Tensor value);

  Var linear(Var input, Var weight, Var bias);
  Var activation(Var input, Activation kind);
  // Per-example -log softmax(alpha * logits)_y as an [n] tensor.
  Var scaled_softmax_cross_entropy(Var logits, std::span<const Label> labels, double alpha);
  // (1/n) * sum_i weights[i] * values[i], a scalar.
  Var weighted_mean(Var values, std::span<const double> weights);
  Var sum(Var values);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Gradients of a scalar node with respect to every leaf it depends on.
  Gradient backward(Var loss) const;

 private:
  enum class Op { leaf, constant, linear, activation, cross_entropy, weighted_mean, sum };

  struct Node {
    Node(Op op_, Tensor value_, std::vector<std::size_t> operands_ = {})
        : op(op_), value(std::move(value_)), operands(std::move(operands_)) {}

    Op op;
    Tensor value;
    std::vector<std::size_t> operands;
    bool requires_grad = false;
    Activation kind = Activation::relu;
    double alpha = 1.0;
    std::vector<Label> labels;
    std::vector<double> weights;
    // Cached softmax(alpha * logits) for the cross-entropy backward pass.
    Tensor probabilities;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace advlab
