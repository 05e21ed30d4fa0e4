// SPDX-License-Identifier: Apache-2.0
#include "treenlg/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "treenlg/error.hpp"

namespace treenlg {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::append(Node node) {
  nodes_.push_back(std::move(node));
  have_grads_ = false;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw DomainError("constant contains a non-finite value");
  Node n;
  n.owned = std::move(value);
  n.op = "constant";
  return append(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.ref = &value;
  n.op = "constant";
  return append(std::move(n));
}

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw DomainError("leaf contains a non-finite value");
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  n.op = "leaf";
  return append(std::move(n));
}

Var Tape::param(const Tensor& value, std::size_t param_index) {
  Node n;
  n.ref = &value;
  n.requires_grad = true;
  n.param_index = static_cast<std::ptrdiff_t>(param_index);
  n.op = "param";
  return append(std::move(n));
}

Var Tape::push(std::string_view op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw DomainError("op '" + std::string(op) + "' produced a non-finite value");
  }
  Node n;
  n.owned = std::move(value);
  n.op = op;
  for (auto in : inputs) {
    if (in >= nodes_.size()) throw ContractError("op input refers to a later node");
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  return append(std::move(n));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.owned;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss belongs to a different tape");
  const Tensor& lv = value(loss.id());
  if (lv.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " + lv.shape_str());
  }
  grads_.assign(nodes_.size(), Tensor());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) grads_[i] = Tensor::zeros_like(value(i));
  }
  have_grads_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grads_[loss.id()][0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

const Tensor& Tape::grad(std::size_t id) const {
  if (!have_grads_) throw ContractError("gradients requested before backward");
  if (!nodes_[id].requires_grad) throw ContractError("node does not require a gradient");
  return grads_[id];
}

Tensor* Tape::grad_sink(std::size_t id) {
  return nodes_[id].requires_grad ? &grads_[id] : nullptr;
}

std::vector<std::pair<std::size_t, const Tensor*>> Tape::param_grads() const {
  if (!have_grads_) throw ContractError("gradients requested before backward");
  std::vector<std::pair<std::size_t, const Tensor*>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].param_index >= 0) {
      out.emplace_back(static_cast<std::size_t>(nodes_[i].param_index), &grads_[i]);
    }
  }
  return out;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax_values(std::span<const double> x) {
  if (x.empty()) throw DimensionError("softmax of an empty vector");
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

namespace ops {
namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ContractError("operands belong to different tapes");
  }
  return a.tape();
}

void require_vector(const Tensor& t, const char* op) {
  if (t.rank() != 1) {
    throw DimensionError(std::string(op) + " expects a vector, got shape " + t.shape_str());
  }
}

enum class Binary { add, sub, mul };

Var binary(Binary kind, Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const char* name = kind == Binary::add ? "add" : kind == Binary::sub ? "sub" : "mul";
  const bool a_bcast = !av.same_shape(bv) && av.is_scalar();
  const bool b_bcast = !av.same_shape(bv) && bv.is_scalar() && !a_bcast;
  if (!av.same_shape(bv) && !a_bcast && !b_bcast) {
    throw DimensionError(std::string(name) + ": shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor out = a_bcast ? Tensor::zeros_like(bv) : Tensor::zeros_like(av);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[a_bcast ? 0 : i];
    const double y = bv[b_bcast ? 0 : i];
    out[i] = kind == Binary::add ? x + y : kind == Binary::sub ? x - y : x * y;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.push(name, std::move(out), {ia, ib}, [kind, ia, ib, a_bcast, b_bcast](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const std::size_t n = g.size();
    if (Tensor* ga = t.grad_sink(ia)) {
      const Tensor& bv = t.value(ib);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = kind == Binary::mul ? g[i] * bv[b_bcast ? 0 : i] : g[i];
        (*ga)[a_bcast ? 0 : i] += d;
      }
    }
    if (Tensor* gb = t.grad_sink(ib)) {
      const Tensor& av = t.value(ia);
      for (std::size_t i = 0; i < n; ++i) {
        double d = g[i];
        if (kind == Binary::sub) d = -d;
        if (kind == Binary::mul) d *= av[a_bcast ? 0 : i];
        (*gb)[b_bcast ? 0 : i] += d;
      }
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + av.shape_str() + " by " + bv.shape_str());
  }
  const std::size_t m = av.rows(), k = av.cols();
  const bool b_vec = bv.rank() == 1;
  const std::size_t n = b_vec ? 1 : bv.cols();
  Tensor out = b_vec ? Tensor({m}) : Tensor({m, n});
  {
    CMapMat A(av.data().data(), m, k);
    CMapMat B(bv.data().data(), k, n);
    MapMat C(out.data().data(), m, n);
    C.noalias() = A * B;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.push("matmul", std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    CMapMat G(t.grad(self).data().data(), m, n);
    if (Tensor* ga = t.grad_sink(ia)) {
      CMapMat B(t.value(ib).data().data(), k, n);
      MapMat GA(ga->data().data(), m, k);
      GA.noalias() += G * B.transpose();
    }
    if (Tensor* gb = t.grad_sink(ib)) {
      CMapMat A(t.value(ia).data().data(), m, k);
      MapMat GB(gb->data().data(), k, n);
      GB.noalias() += A.transpose() * G;
    }
  });
}

Var add(Var a, Var b) { return binary(Binary::add, a, b); }
Var sub(Var a, Var b) { return binary(Binary::sub, a, b); }
Var mul(Var a, Var b) { return binary(Binary::mul, a, b); }

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().push("scale", std::move(out), {ia}, [ia, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += factor * g[i];
  });
}

Var one_minus(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = 1.0 - v;
  const std::size_t ia = a.id();
  return a.tape().push("one_minus", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] -= g[i];
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = sigmoid_value(v);
  const std::size_t ia = a.id();
  return a.tape().push("sigmoid", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return a.tape().push("tanh", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var log(Var a) {
  Tensor out = a.value();
  for (auto& v : out.data()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
    v = std::log(v);
  }
  const std::size_t ia = a.id();
  return a.tape().push("log", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / x[i];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  Tape& tape = parts.front().tape();
  std::vector<double> data;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) throw ContractError("operands belong to different tapes");
    require_vector(p.value(), "concat");
    offsets.push_back(data.size());
    const auto vals = p.value().data();
    data.insert(data.end(), vals.begin(), vals.end());
    ids.push_back(p.id());
  }
  auto in = ids;
  return tape.push("concat", Tensor::vector(std::move(data)), std::move(in),
                   [ids, offsets](Tape& t, std::size_t self) {
                     const Tensor& g = t.grad(self);
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (Tensor* gk = t.grad_sink(ids[k])) {
                         for (std::size_t i = 0; i < gk->size(); ++i) (*gk)[i] += g[offsets[k] + i];
                       }
                     }
                   });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ia = a.id();
  return a.tape().push("sum", Tensor::scalar(total), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor* ga = t.grad_sink(ia);
    for (auto& v : ga->data()) v += g;
  });
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& av = a.value();
  require_vector(av, "slice");
  if (length == 0 || offset + length > av.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                         ") out of range for shape " + av.shape_str());
  }
  const auto src = av.data().subspan(offset, length);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  const std::size_t ia = a.id();
  return a.tape().push("slice", std::move(out), {ia}, [ia, offset](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[offset + i] += g[i];
  });
}

Var softmax(Var a) {
  require_vector(a.value(), "softmax");
  Tensor out = Tensor::vector(softmax_values(a.value().data()));
  const std::size_t ia = a.id();
  return a.tape().push("softmax", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += y[i] * (g[i] - dot);
  });
}

Var log_softmax(Var a) {
  const Tensor& av = a.value();
  require_vector(av, "log_softmax");
  const double mx = *std::max_element(av.data().begin(), av.data().end());
  double total = 0.0;
  for (double v : av.data()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  Tensor out = av;
  for (auto& v : out.data()) v -= lse;
  const std::size_t ia = a.id();
  return a.tape().push("log_softmax", std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double gsum = 0.0;
    for (double v : g.data()) gsum += v;
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] - std::exp(y[i]) * gsum;
  });
}

Var pick(Var a, std::size_t index) {
  const Tensor& av = a.value();
  require_vector(av, "pick");
  if (index >= av.size()) {
    throw DimensionError("pick index " + std::to_string(index) + " out of range for " + av.shape_str());
  }
  const std::size_t ia = a.id();
  return a.tape().push("pick", Tensor::scalar(av[index]), {ia}, [ia, index](Tape& t, std::size_t self) {
    (*t.grad_sink(ia))[index] += t.grad(self)[0];
  });
}

Var row(Var matrix, std::size_t index) {
  const Tensor& mv = matrix.value();
  if (mv.rank() != 2 || index >= mv.rows()) {
    throw DimensionError("row " + std::to_string(index) + " out of range for " + mv.shape_str());
  }
  const std::size_t n = mv.cols();
  const auto src = mv.data().subspan(index * n, n);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  const std::size_t im = matrix.id();
  return matrix.tape().push("row", std::move(out), {im}, [im, index, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* gm = t.grad_sink(im);
    for (std::size_t i = 0; i < n; ++i) (*gm)[index * n + i] += g[i];
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows of zero vectors");
  Tape& tape = rows.front().tape();
  const std::size_t n = rows.front().value().size();
  std::vector<double> data;
  data.reserve(rows.size() * n);
  std::vector<std::size_t> ids;
  for (const Var& r : rows) {
    if (&r.tape() != &tape) throw ContractError("operands belong to different tapes");
    require_vector(r.value(), "stack_rows");
    if (r.value().size() != n) {
      throw DimensionError("stack_rows: row length " + std::to_string(r.value().size()) + " vs " + std::to_string(n));
    }
    const auto vals = r.value().data();
    data.insert(data.end(), vals.begin(), vals.end());
    ids.push_back(r.id());
  }
  auto in = ids;
  return tape.push("stack_rows", Tensor::matrix(rows.size(), n, std::move(data)), std::move(in),
                   [ids, n](Tape& t, std::size_t self) {
                     const Tensor& g = t.grad(self);
                     for (std::size_t k = 0; k < ids.size(); ++k) {
                       if (Tensor* gk = t.grad_sink(ids[k])) {
                         for (std::size_t i = 0; i < n; ++i) (*gk)[i] += g[k * n + i];
                       }
                     }
                   });
}

Var scatter(Var a, std::span<const std::size_t> indices, std::size_t length) {
  const Tensor& av = a.value();
  require_vector(av, "scatter");
  if (indices.size() != av.size()) {
    throw DimensionError("scatter: " + std::to_string(indices.size()) + " indices for " + av.shape_str());
  }
  Tensor out({length});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= length) throw DimensionError("scatter index out of range");
    out[indices[k]] += av[k];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t ia = a.id();
  return a.tape().push("scatter", std::move(out), {ia}, [ia, idx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t k = 0; k < idx.size(); ++k) (*ga)[k] += g[idx[k]];
  });
}

Var dropout(Var a, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor mask = Tensor::zeros_like(a.value());
  for (auto& m : mask.data()) m = unit(rng) < rate ? 0.0 : keep_scale;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ia = a.id();
  return a.tape().push("dropout", std::move(out), {ia}, [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* ga = t.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * mask[i];
  });
}

Var elementwise(Kind kind, std::span<const Var> inputs) {
  auto arity = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw DimensionError("elementwise op expects " + std::to_string(n) + " inputs, got " +
                           std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case Kind::add: arity(2); return add(inputs[0], inputs[1]);
    case Kind::mul: arity(2); return mul(inputs[0], inputs[1]);
    case Kind::sigmoid: arity(1); return sigmoid(inputs[0]);
    case Kind::tanh: arity(1); return tanh(inputs[0]);
    case Kind::log: arity(1); return log(inputs[0]);
    case Kind::sum: arity(1); return sum(inputs[0]);
    case Kind::concat: return concat(inputs);
  }
  throw ContractError("unknown elementwise kind");
}

}  // namespace ops
}  // namespace treenlg
