// SPDX-License-Identifier: Apache-2.0
#include "treenlg/optim.hpp"

#include <cmath>

#include "treenlg/error.hpp"

namespace treenlg {

std::size_t ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter name " + name);
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

std::size_t ParamSet::index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw ContractError("unknown parameter " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::vector<Tensor> ParamSet::zeros_like() const {
  std::vector<Tensor> out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.push_back(Tensor::zeros_like(t));
  return out;
}

void accumulate_param_grads(const Tape& tape, std::vector<Tensor>& grads) {
  for (const auto& [index, grad] : tape.param_grads()) {
    Tensor& dst = grads.at(index);
    if (!dst.same_shape(*grad)) {
      throw DimensionError("gradient shape " + grad->shape_str() + " vs accumulator " + dst.shape_str());
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += (*grad)[i];
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& g : grads) {
      for (auto& v : g.data()) v *= factor;
    }
  }
  return norm;
}

AdamState::AdamState(const ParamSet& params, AdamConfig config)
    : config_(config), m_(params.zeros_like()), v_(params.zeros_like()) {}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " + std::to_string(state.m_.size()) +
                         " moment slots");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].same_shape(grads[p]) || !params[p].same_shape(state.m_[p])) {
      throw DimensionError("adam_step: parameter " + std::to_string(p) + " has shape " +
                           params[p].shape_str() + " but gradient " + grads[p].shape_str());
    }
  }
  ++state.step_;
  const auto& c = state.config_;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto theta = params[p].data();
    auto g = grads[p].data();
    auto m = state.m_[p].data();
    auto v = state.v_[p].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace treenlg
