// SPDX-License-Identifier: Apache-2.0
#include "treenlg/model.hpp"

#include "treenlg/error.hpp"

namespace treenlg {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::tree_att: return "tree+att";
    case Mode::tree: return "tree";
    case Mode::flat: return "flat";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "tree+att" || s == "tree_att") return Mode::tree_att;
  if (s == "tree") return Mode::tree;
  if (s == "flat") return Mode::flat;
  return std::nullopt;
}

bool uses_attention(Mode m) { return m == Mode::tree_att; }

Model::Model(Mode mode, Ontology ontology, Vocabulary vocab, std::size_t hidden, std::uint64_t seed)
    : mode_(mode), ontology_(std::move(ontology)), vocab_(std::move(vocab)), tokens_(ontology_), hidden_(hidden) {
  if (hidden_ == 0) throw ConfigError("hidden size must be positive");
  if (uses_attention(mode_) != vocab_.has_placeholder()) {
    throw ContractError("vocabulary placeholder does not match mode " + std::string(to_string(mode_)));
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  for (auto& [name, shape] : layout()) {
    Tensor t(shape);
    // Biases stay zero.
    if (shape.size() == 2) {
      for (auto& v : t.data()) v = init(rng);
    }
    params_.add(name, std::move(t));
  }
}

Model::Model(Mode mode, Ontology ontology, Vocabulary vocab, std::size_t hidden, ParamSet params)
    : mode_(mode),
      ontology_(std::move(ontology)),
      vocab_(std::move(vocab)),
      tokens_(ontology_),
      hidden_(hidden),
      params_(std::move(params)) {
  if (hidden_ == 0) throw ParseError("hidden size must be positive");
  if (uses_attention(mode_) != vocab_.has_placeholder()) {
    throw ParseError("vocabulary placeholder does not match mode " + std::string(to_string(mode_)));
  }
  const auto expected = layout();
  if (expected.size() != params_.size()) {
    throw ParseError("expected " + std::to_string(expected.size()) + " tensors, found " +
                     std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (params_.name(i) != expected[i].first || params_[i].shape() != expected[i].second) {
      throw ParseError("tensor " + params_.name(i) + " " + params_[i].shape_str() + " does not match " +
                       expected[i].first + " " + shape_string(expected[i].second));
    }
  }
}

std::size_t Model::feedback_size() const {
  if (!uses_attention(mode_)) return 0;
  return ontology_.domains().size() + ontology_.acts().size() + ontology_.slots().size();
}

std::vector<std::pair<std::string, Shape>> Model::layout() const {
  const std::size_t H = hidden_;
  const std::size_t V = vocab_.size();
  std::vector<std::pair<std::string, Shape>> out;
  if (mode_ == Mode::flat) {
    out.push_back({"flat.weight", {H, std::max<std::size_t>(ontology_.triple_count(), 1)}});
    out.push_back({"flat.bias", {H}});
  } else {
    out.push_back({"enc.embedding", {tokens_.size(), H}});
    out.push_back({"enc.input", {4 * H, H}});
    out.push_back({"enc.recurrent", {4 * H, H}});
    out.push_back({"enc.bias", {4 * H}});
  }
  out.push_back({"dec.embedding", {V, H}});
  out.push_back({"dec.input", {7 * H, H + feedback_size()}});
  out.push_back({"dec.recurrent", {7 * H, H}});
  out.push_back({"dec.semantic", {3 * H, H}});
  out.push_back({"dec.bias", {7 * H}});
  out.push_back({"dec.output", {V, H}});
  return out;
}

Model::Bound Model::bind(Tape& tape, bool trainable) const {
  auto get = [&](const std::string& name) {
    const std::size_t i = params_.index(name);
    return trainable ? tape.param(params_[i], i) : tape.constant_ref(params_[i]);
  };
  Bound b;
  if (mode_ == Mode::flat) {
    b.flat_weight = get("flat.weight");
    b.flat_bias = get("flat.bias");
  } else {
    b.tree = EncoderWeights{get("enc.embedding"), get("enc.input"), get("enc.recurrent"), get("enc.bias"), hidden_};
  }
  b.decoder = DecoderWeights{get("dec.embedding"), get("dec.input"), get("dec.recurrent"), get("dec.semantic"),
                             get("dec.bias"),      get("dec.output"), hidden_,            feedback_size()};
  return b;
}

Model::Encoded Model::encode(Tape& tape, const Bound& bound, const SemanticRepresentation& sr) const {
  Encoded out;
  if (mode_ == Mode::flat) {
    out.f_sr = encode_flat(tape, sr, ontology_, bound.flat_weight, bound.flat_bias);
    return out;
  }
  const SemTree tree = build_tree(sr, ontology_, tokens_);
  const EncodedTree enc = treenlg::encode(tape, tree, *bound.tree);
  out.f_sr = enc.f_sr;
  if (uses_attention(mode_)) out.keys = attention_keys(tree, enc, ontology_);
  return out;
}

}  // namespace treenlg
