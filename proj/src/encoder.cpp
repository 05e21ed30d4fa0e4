// SPDX-License-Identifier: Apache-2.0
#include "treenlg/encoder.hpp"

#include <algorithm>

#include "treenlg/error.hpp"

namespace treenlg {

EncodedTree encode(Tape& /*tape*/, const SemTree& tree, const EncoderWeights& w) {
  const std::size_t H = w.hidden;
  EncodedTree out;
  out.states.resize(tree.nodes.size());

  // Post-order over the tree so children are ready before their parent.
  std::vector<std::size_t> order;
  std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(n);
      continue;
    }
    stack.push_back({n, true});
    for (std::size_t c : tree.nodes[n].children) stack.push_back({c, false});
  }

  for (std::size_t n : order) {
    const TreeNode& node = tree.nodes[n];
    std::vector<std::size_t> kids = node.children;
    std::sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
      return tree.nodes[a].token < tree.nodes[b].token;
    });

    Var e = ops::row(w.embedding, node.token);
    Var z = ops::add(ops::matmul(w.input, e), w.bias);
    Var c_sum;
    if (!kids.empty()) {
      Var h_sum = out.states[kids[0]].h;
      c_sum = out.states[kids[0]].c;
      for (std::size_t k = 1; k < kids.size(); ++k) {
        h_sum = ops::add(h_sum, out.states[kids[k]].h);
        c_sum = ops::add(c_sum, out.states[kids[k]].c);
      }
      z = ops::add(z, ops::matmul(w.recurrent, h_sum));
    }
    Var i = ops::sigmoid(ops::slice(z, 0, H));
    Var o = ops::sigmoid(ops::slice(z, 2 * H, H));
    Var g = ops::tanh(ops::slice(z, 3 * H, H));
    Var c = ops::mul(i, g);
    if (!kids.empty()) {
      Var f = ops::sigmoid(ops::slice(z, H, H));
      c = ops::add(c, ops::mul(f, c_sum));
    }
    Var h = ops::mul(o, ops::tanh(c));
    out.states[n] = {h, c};
  }
  out.f_sr = out.states[0].h;
  return out;
}

Tensor flat_indicator(const SemanticRepresentation& sr, const Ontology& ontology) {
  const auto triples = ontology.triples();
  Tensor ind({std::max<std::size_t>(triples.size(), 1)});
  for (const auto& e : sr.entries) {
    if (e.value.kind == SlotValue::Kind::none) continue;
    auto it = std::lower_bound(triples.begin(), triples.end(), e.triple());
    if (it == triples.end() || *it != e.triple()) {
      throw ContractError("SR entry (" + e.domain + ", " + e.act + ", " + e.slot + ") not in ontology");
    }
    ind[static_cast<std::size_t>(it - triples.begin())] = 1.0;
  }
  return ind;
}

Var encode_flat(Tape& tape, const SemanticRepresentation& sr, const Ontology& ontology, Var weight, Var bias) {
  Var ind = tape.constant(flat_indicator(sr, ontology));
  return ops::tanh(ops::add(ops::matmul(weight, ind), bias));
}

}  // namespace treenlg
