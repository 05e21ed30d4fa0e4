// SPDX-License-Identifier: Apache-2.0
#include "treenlg/generation.hpp"

namespace treenlg {

NlgSearch::NlgSearch(const Model& model, const SemanticRepresentation& sr) : model_(model), sr_(sr) {
  Tape tape;
  const auto bound = model_.bind(tape, false);
  const auto enc = model_.encode(tape, bound, sr_);
  f_sr_ = enc.f_sr.value();
  if (enc.keys) {
    for (const LayerKeys* l : {&enc.keys->domain, &enc.keys->act, &enc.keys->slot}) {
      Keys k;
      k.labels = l->labels;
      k.universe = l->universe;
      if (!l->labels.empty()) k.keys = l->keys.value();
      keys_.push_back(std::move(k));
    }
  }
}

NlgSearch::State NlgSearch::initial() const {
  State start;
  start.h = Tensor({model_.hidden()});
  start.c = Tensor({model_.hidden()});
  start.s = f_sr_;
  return advance(start, model_.vocab().bos(), true);
}

NlgSearch::State NlgSearch::extend(const State& state, std::size_t token) const { return advance(state, token, false); }

NlgSearch::State NlgSearch::advance(const State& prev, std::size_t token, bool first) const {
  Tape tape;
  const auto bound = model_.bind(tape, false);
  const DecoderState in{tape.constant_ref(prev.h), tape.constant_ref(prev.c), tape.constant_ref(prev.s)};

  State next;
  if (!first) {
    next.surfaces = prev.surfaces;
    next.trace = prev.trace;
    next.emitted = prev.emitted;
  }
  std::optional<AttentionDists> dists;
  const Vocabulary& vocab = model_.vocab();
  if (!first && vocab.has_placeholder() && token == vocab.placeholder()) {
    auto bind_layer = [&](const Keys& k) {
      LayerKeys l{k.labels, {}, k.universe};
      if (!k.labels.empty()) l.keys = tape.constant_ref(k.keys);
      return l;
    };
    const AttentionKeys keys{bind_layer(keys_[0]), bind_layer(keys_[1]), bind_layer(keys_[2])};
    dists = attend(in.s, keys);
    AttentionStep entry = assemble_token(dists->domain.value().data(), dists->act.value().data(),
                                         dists->slot.value().data(), model_.ontology(), prev.surfaces.size());
    const DelexToken tok =
        number_occurrence(entry.chosen, triple_multiplicity(sr_, entry.chosen), next.emitted);
    next.surfaces.push_back(tok.surface());
    next.trace.push_back(std::move(entry));
  } else if (!first) {
    next.surfaces.push_back(vocab.word(token));
  }

  Var x = make_feedback_input(tape, token, dists ? &*dists : nullptr, bound.decoder);
  const StepResult out = step(in, x, bound.decoder);
  next.h = out.state.h.value();
  next.c = out.state.c.value();
  next.s = out.state.s.value();
  const auto lp = ops::log_softmax(out.logits).value().data();
  next.log_probs.assign(lp.begin(), lp.end());
  return next;
}

namespace {

GenerationResult convert(SearchResult<NlgSearch::State>&& found) {
  GenerationResult out;
  out.truncated = found.truncated;
  for (auto& h : found.hyps) {
    GeneratedHypothesis g;
    g.tokens = std::move(h.state.surfaces);
    g.delex = join_tokens(g.tokens);
    g.score = h.score;
    g.step_log_probs = std::move(h.step_log_probs);
    g.trace = std::move(h.state.trace);
    g.finished = h.finished;
    out.hyps.push_back(std::move(g));
  }
  return out;
}

}  // namespace

GenerationResult beam_decode(const Model& model, const SemanticRepresentation& sr, std::size_t beam,
                             std::size_t max_length) {
  const NlgSearch search(model, sr);
  GenerationResult r = convert(beam_search(search, beam, max_length));
  render(r, sr, model.ontology());
  return r;
}

GenerationResult greedy_decode(const Model& model, const SemanticRepresentation& sr, std::size_t max_length) {
  const NlgSearch search(model, sr);
  GenerationResult r = convert(greedy_search(search, max_length));
  render(r, sr, model.ontology());
  return r;
}

void render(GenerationResult& result, const SemanticRepresentation& sr, const Ontology& ontology) {
  for (auto& h : result.hyps) {
    auto lex = lexicalize_lenient(sr, ontology, h.delex);
    h.text = std::move(lex.text);
    h.unresolved = std::move(lex.unresolved);
  }
}

nlohmann::json to_json(const GenerationResult& result, const SemanticRepresentation& sr, const Ontology& ontology) {
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : result.hyps) {
    nlohmann::json j{{"delex", h.delex}, {"text", h.text}, {"score", h.score}};
    if (!h.unresolved.empty()) j["unresolved"] = h.unresolved;
    hyps.push_back(std::move(j));
  }
  nlohmann::json out{{"sr", to_json(sr)}, {"hyps", std::move(hyps)}, {"truncated", result.truncated}};
  if (!result.hyps.empty()) out["trace"] = to_json(result.hyps.front().trace, ontology);
  return out;
}

}  // namespace treenlg
