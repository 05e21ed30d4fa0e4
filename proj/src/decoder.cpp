// SPDX-License-Identifier: Apache-2.0
#include "treenlg/decoder.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "treenlg/error.hpp"

namespace treenlg {

Var Dropout::operator()(Var v) const {
  if (!training || rate == 0.0) return v;
  if (rng == nullptr) throw ContractError("training dropout needs a random generator");
  return ops::dropout(v, rate, training, *rng);
}

DecoderState initial_state(Tape& tape, Var f_sr) {
  const std::size_t H = f_sr.value().size();
  Var zero = tape.constant(Tensor({H}));
  return {zero, zero, f_sr};
}

StepResult step(const DecoderState& prev, Var input, const DecoderWeights& w, const Dropout& dropout) {
  const std::size_t H = w.hidden;
  const auto expect = [](const Var& v, std::size_t n, const char* what) {
    if (v.value().rank() != 1 || v.value().size() != n) {
      throw DimensionError(std::string("decoder ") + what + " has shape " + v.value().shape_str() + ", expected [" +
                           std::to_string(n) + "]");
    }
  };
  expect(prev.h, H, "h");
  expect(prev.c, H, "c");
  expect(prev.s, H, "s");
  expect(input, w.input.value().cols(), "input");

  Var z = ops::add(ops::add(ops::matmul(w.input, input), ops::matmul(w.recurrent, prev.h)), w.bias);
  Var zs = ops::matmul(w.semantic, prev.s);
  Var i = ops::sigmoid(ops::slice(z, 0, H));
  Var f = ops::sigmoid(ops::slice(z, H, H));
  Var o = ops::sigmoid(ops::slice(z, 2 * H, H));
  Var g = ops::tanh(ops::slice(z, 3 * H, H));
  Var r = ops::sigmoid(ops::add(ops::slice(z, 4 * H, H), ops::slice(zs, 0, H)));
  Var wr = ops::sigmoid(ops::add(ops::slice(z, 5 * H, H), ops::slice(zs, H, H)));
  Var d = ops::tanh(ops::add(ops::slice(z, 6 * H, H), ops::slice(zs, 2 * H, H)));

  Var c = ops::add(ops::mul(i, g), ops::mul(f, prev.c));
  Var s = ops::add(ops::mul(wr, d), ops::mul(r, prev.s));
  Var h = ops::add(ops::mul(o, ops::tanh(c)), ops::mul(ops::one_minus(o), ops::tanh(s)));
  Var logits = ops::matmul(w.output, dropout(h));
  return {{h, c, s}, logits};
}

namespace {

void add_key(std::map<std::size_t, Var>& acc, std::size_t label, Var h) {
  auto [it, fresh] = acc.try_emplace(label, h);
  if (!fresh) it->second = ops::add(it->second, h);
}

LayerKeys to_layer(const std::map<std::size_t, Var>& acc, std::size_t universe) {
  LayerKeys out;
  out.universe = universe;
  std::vector<Var> rows;
  for (const auto& [label, h] : acc) {
    out.labels.push_back(label);
    rows.push_back(h);
  }
  if (!rows.empty()) out.keys = ops::stack_rows(rows);
  return out;
}

}  // namespace

AttentionKeys attention_keys(const SemTree& tree, const EncodedTree& encoded, const Ontology& ontology) {
  std::map<std::size_t, Var> domains, acts, slots;
  // Node order is deterministic, so the summation order is too.
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    const TreeNode& node = tree.nodes[n];
    const Var h = encoded.states.at(n).h;
    switch (node.layer) {
      case Layer::domain:
        add_key(domains, ontology.domain_index(node.label).value(), h);
        break;
      case Layer::act:
        add_key(acts, ontology.act_index(node.label).value(), h);
        break;
      case Layer::slot:
        if (node.label != EncoderTokens::kNoSlot) add_key(slots, ontology.slot_index(node.label).value(), h);
        break;
      default:
        break;
    }
  }
  return {to_layer(domains, ontology.domains().size()), to_layer(acts, ontology.acts().size()),
          to_layer(slots, ontology.slots().size())};
}

namespace {

Var attend_layer(Var s, const LayerKeys& layer, const char* name, bool may_be_empty) {
  if (layer.labels.empty()) {
    if (!may_be_empty) throw ContractError(std::string("no activated ") + name + " to attend over");
    return s.tape().constant(Tensor({std::max<std::size_t>(layer.universe, 1)}));
  }
  Var scores = ops::matmul(layer.keys, s);
  return ops::scatter(ops::softmax(scores), layer.labels, layer.universe);
}

std::size_t argmax(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace

AttentionDists attend(Var s, const AttentionKeys& keys) {
  return {attend_layer(s, keys.domain, "domain", false), attend_layer(s, keys.act, "act", false),
          attend_layer(s, keys.slot, "slot", true)};
}

AttentionStep assemble_token(std::span<const double> domain, std::span<const double> act,
                             std::span<const double> slot, const Ontology& ontology, std::size_t step) {
  if (domain.size() != ontology.domains().size() || act.size() != ontology.acts().size() ||
      slot.size() != ontology.slots().size()) {
    throw DimensionError("attention distributions do not match the ontology label sets");
  }
  AttentionStep out;
  out.step = step;
  out.domain.assign(domain.begin(), domain.end());
  out.act.assign(act.begin(), act.end());
  out.slot.assign(slot.begin(), slot.end());
  out.chosen = {ontology.domains()[argmax(domain)], ontology.acts()[argmax(act)], ontology.slots()[argmax(slot)]};
  return out;
}

DelexToken number_occurrence(const Triple& triple, std::size_t multiplicity, std::map<Triple, int>& emitted) {
  const int n = ++emitted[triple];
  return {triple, multiplicity > 1 ? n : 0};
}

Var make_feedback_input(Tape& tape, std::size_t word, const AttentionDists* dists, const DecoderWeights& w,
                        const Dropout& dropout) {
  Var e = dropout(ops::row(w.embedding, word));
  if (w.feedback == 0) {
    if (dists != nullptr) throw ContractError("feedback distributions given to a model without attention");
    return e;
  }
  if (dists == nullptr) {
    const std::array<Var, 2> parts{e, tape.constant(Tensor({w.feedback}))};
    return ops::concat(parts);
  }
  const std::array<Var, 4> parts{e, dists->domain, dists->act, dists->slot};
  Var x = ops::concat(parts);
  if (x.value().size() != w.input.value().cols()) {
    throw DimensionError("feedback block of " + std::to_string(x.value().size() - e.value().size()) +
                         " values, expected " + std::to_string(w.feedback));
  }
  return x;
}

nlohmann::json to_json(const AttentionTrace& trace, const Ontology& ontology) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace) {
    steps.push_back({{"step", s.step},
                     {"chosen", DelexToken{s.chosen, 0}.surface()},
                     {"domain", s.domain},
                     {"act", s.act},
                     {"slot", s.slot}});
  }
  return {{"labels", {{"domain", ontology.domains()}, {"act", ontology.acts()}, {"slot", ontology.slots()}}},
          {"steps", std::move(steps)}};
}

std::string trace_csv(const AttentionTrace& trace, const Ontology& ontology, Layer layer) {
  const std::vector<std::string>* labels = nullptr;
  switch (layer) {
    case Layer::domain: labels = &ontology.domains(); break;
    case Layer::act: labels = &ontology.acts(); break;
    case Layer::slot: labels = &ontology.slots(); break;
    default: throw ContractError("attention is defined on the domain, act and slot layers only");
  }
  std::ostringstream out;
  out.precision(17);
  out << "step";
  for (const auto& l : *labels) out << ',' << l;
  out << '\n';
  for (const auto& s : trace) {
    const auto& row = layer == Layer::domain ? s.domain : layer == Layer::act ? s.act : s.slot;
    out << s.step;
    for (double p : row) out << ',' << p;
    out << '\n';
  }
  return out.str();
}

}  // namespace treenlg
