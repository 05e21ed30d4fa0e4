// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/autodiff.hpp"
#include "treenlg/encoder.hpp"
#include "treenlg/ontology.hpp"
#include "treenlg/sem_tree.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

/// Decoder weights bound on a tape. Gate blocks are stacked in the order
/// i, f, o, g, r, w, d; only r, w, d read the semantic state.
struct DecoderWeights {
  Var embedding;  // [V x E]
  Var input;      // [7H x (E + F)]
  Var recurrent;  // [7H x H]
  Var semantic;   // [3H x H]
  Var bias;       // [7H]
  Var output;     // [V x H], no bias
  std::size_t hidden = 0;
  std::size_t feedback = 0;  // F = |D| + |A| + |S| with attention, else 0
};

struct DecoderState {
  Var h;
  Var c;
  Var s;  // semantic state
};

/// Inverted dropout applied to the word embedding and to h_t before the
/// output projection. Inactive unless `training` is set.
struct Dropout {
  double rate = 0.0;
  bool training = false;
  Rng* rng = nullptr;
  Var operator()(Var v) const;
};

/// h_0 = c_0 = 0, s_0 = f_SR.
DecoderState initial_state(Tape& tape, Var f_sr);

struct StepResult {
  DecoderState state;
  Var logits;  // W_out * h_t; softmax gives the word distribution
};

/// One decoder transition. Throws DimensionError when the input or state
/// sizes disagree with the weights.
StepResult step(const DecoderState& prev, Var input, const DecoderWeights& w, const Dropout& dropout = {});

/// Attention keys of one tree layer: summed hidden states per activated
/// label, labels given as canonical indices in ascending order.
struct LayerKeys {
  std::vector<std::size_t> labels;
  Var keys;  // [labels x H]
  std::size_t universe = 0;
};

struct AttentionKeys {
  LayerKeys domain;
  LayerKeys act;
  LayerKeys slot;
};

/// Collects keys from an encoded tree. Synthetic no-slot nodes are skipped.
AttentionKeys attention_keys(const SemTree& tree, const EncodedTree& encoded, const Ontology& ontology);

/// Distributions laid out over the full label sets D, A, S; labels that are
/// not activated carry probability 0.
struct AttentionDists {
  Var domain;
  Var act;
  Var slot;
};

/// Dot-product attention of the semantic state on each layer. An SR made
/// only of slotless acts has no slot label; its slot distribution is all
/// zeros. Throws ContractError when no domain or act is activated.
AttentionDists attend(Var s, const AttentionKeys& keys);

struct AttentionStep {
  std::size_t step = 0;
  std::vector<double> domain;
  std::vector<double> act;
  std::vector<double> slot;
  Triple chosen;
};
using AttentionTrace = std::vector<AttentionStep>;

/// Argmax per layer (lowest index on ties) and the trace entry for `step`.
AttentionStep assemble_token(std::span<const double> domain, std::span<const double> act,
                             std::span<const double> slot, const Ontology& ontology, std::size_t step);

/// Occurrence numbering in emission order. `emitted` counts prior emissions
/// per triple and is updated.
DelexToken number_occurrence(const Triple& triple, std::size_t multiplicity, std::map<Triple, int>& emitted);

/// Word embedding of `word` followed by the feedback block: the three
/// distributions when `dists` is given, zeros otherwise.
Var make_feedback_input(Tape& tape, std::size_t word, const AttentionDists* dists, const DecoderWeights& w,
                        const Dropout& dropout = {});

nlohmann::json to_json(const AttentionTrace& trace, const Ontology& ontology);
/// One matrix per layer: header "step,<labels...>", one row per placeholder step.
std::string trace_csv(const AttentionTrace& trace, const Ontology& ontology, Layer layer);

}  // namespace treenlg
