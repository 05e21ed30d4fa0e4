// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "treenlg/autodiff.hpp"
#include "treenlg/decoder.hpp"
#include "treenlg/encoder.hpp"
#include "treenlg/ontology.hpp"
#include "treenlg/optim.hpp"
#include "treenlg/sem_tree.hpp"
#include "treenlg/semantics.hpp"
#include "treenlg/vocabulary.hpp"

namespace treenlg {

/// tree_att: tree encoder, placeholder "@" resolved by layer-wise attention.
/// tree: tree encoder, slot tokens generated as ordinary words.
/// flat: indicator-vector encoder, slot tokens as ordinary words.
enum class Mode { tree_att, tree, flat };

std::string_view to_string(Mode m);
/// Accepts "tree+att", "tree_att", "tree", "flat".
std::optional<Mode> parse_mode(std::string_view s);
bool uses_attention(Mode m);

/// Parameters plus everything needed to interpret them. Word embeddings have
/// the hidden size.
class Model {
 public:
  /// Uniform(-0.1, 0.1) weights, zero biases.
  Model(Mode mode, Ontology ontology, Vocabulary vocab, std::size_t hidden, std::uint64_t seed);
  /// Adopts existing tensors; throws ParseError on a missing or misshapen one.
  Model(Mode mode, Ontology ontology, Vocabulary vocab, std::size_t hidden, ParamSet params);

  Mode mode() const { return mode_; }
  const Ontology& ontology() const { return ontology_; }
  const Vocabulary& vocab() const { return vocab_; }
  const EncoderTokens& tokens() const { return tokens_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t feedback_size() const;
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Expected parameter shapes in storage order.
  std::vector<std::pair<std::string, Shape>> layout() const;

  struct Bound {
    std::optional<EncoderWeights> tree;
    Var flat_weight;
    Var flat_bias;
    DecoderWeights decoder;
  };
  /// Puts every parameter on `tape`, as trainable leaves or as constants.
  Bound bind(Tape& tape, bool trainable) const;

  struct Encoded {
    Var f_sr;
    std::optional<AttentionKeys> keys;  // attention mode only
  };
  Encoded encode(Tape& tape, const Bound& bound, const SemanticRepresentation& sr) const;

 private:
  Mode mode_;
  Ontology ontology_;
  Vocabulary vocab_;
  EncoderTokens tokens_;
  std::size_t hidden_;
  ParamSet params_;
};

}  // namespace treenlg
