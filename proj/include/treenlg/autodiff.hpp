// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "treenlg/tensor.hpp"

namespace treenlg {

using Rng = std::mt19937_64;

class Tape;

/// Handle to one node on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Called once during the reverse sweep with the node's own id; reads the
/// node's gradient and accumulates into its inputs' gradients.
using BackwardFn = std::function<void(Tape&, std::size_t)>;

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so ids
/// are a topological order of the graph. Single owner; not thread-safe.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Constant that aliases `value`; the tensor must outlive the tape.
  Var constant_ref(const Tensor& value);
  Var leaf(Tensor value);
  /// Trainable parameter aliasing `value`. Its gradient is reported by
  /// param_grads() under `param_index`.
  Var param(const Tensor& value, std::size_t param_index);

  /// Appends an op node. `backward` is dropped when no input needs a gradient.
  Var push(std::string_view op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

  /// Zeroes every gradient, seeds d(loss)=1 and sweeps in reverse id order.
  void backward(Var loss);
  const Tensor& grad(std::size_t id) const;
  /// Gradient accumulator for an input inside a BackwardFn; nullptr when the
  /// node does not take part in differentiation.
  Tensor* grad_sink(std::size_t id);

  /// (param_index, gradient) for every parameter node, in node order.
  std::vector<std::pair<std::size_t, const Tensor*>> param_grads() const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::ptrdiff_t param_index = -1;
    bool requires_grad = false;
    std::string_view op;
  };

  Var append(Node node);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool have_grads_ = false;
};

/// Graph operations. Every op validates shapes and registers its adjoint.
namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);
Var concat(std::span<const Var> parts);
Var sum(Var a);
Var slice(Var a, std::size_t offset, std::size_t length);
Var softmax(Var a);
Var log_softmax(Var a);
Var pick(Var a, std::size_t index);
Var row(Var matrix, std::size_t index);
Var stack_rows(std::span<const Var> rows);
Var scatter(Var a, std::span<const std::size_t> indices, std::size_t length);
Var dropout(Var a, double rate, bool training, Rng& rng);

enum class Kind { add, mul, sigmoid, tanh, log, concat, sum };
/// Dispatcher over the pointwise family.
Var elementwise(Kind kind, std::span<const Var> inputs);

}  // namespace ops

/// Max-shifted softmax over plain values.
std::vector<double> softmax_values(std::span<const double> x);
double sigmoid_value(double x);

}  // namespace treenlg
