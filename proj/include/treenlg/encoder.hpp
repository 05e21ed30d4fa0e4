// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "treenlg/autodiff.hpp"
#include "treenlg/ontology.hpp"
#include "treenlg/sem_tree.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

/// Child-sum tree-LSTM weights bound on a tape. Gate blocks are stacked in
/// the order i, f, o, g: `input` is [4H x E], `recurrent` [4H x H],
/// `bias` [4H].
struct EncoderWeights {
  Var embedding;  // [tokens x E]
  Var input;
  Var recurrent;
  Var bias;
  std::size_t hidden = 0;
};

struct NodeState {
  Var h;
  Var c;
};

struct EncodedTree {
  Var f_sr;                       // root hidden state
  std::vector<NodeState> states;  // indexed like SemTree::nodes
};

/// Bottom-up encoding. Children are summed in token order regardless of how
/// they are stored, so the result does not depend on child order.
EncodedTree encode(Tape& tape, const SemTree& tree, const EncoderWeights& w);

/// Binary indicator over Ontology::triples() (canonical order).
Tensor flat_indicator(const SemanticRepresentation& sr, const Ontology& ontology);

/// tanh(W * indicator + b): the flat-encoder baseline's semantic embedding.
Var encode_flat(Tape& tape, const SemanticRepresentation& sr, const Ontology& ontology, Var weight, Var bias);

}  // namespace treenlg
