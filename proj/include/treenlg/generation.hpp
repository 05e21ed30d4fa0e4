// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/decoder.hpp"
#include "treenlg/error.hpp"
#include "treenlg/model.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

/// Anything that can be searched: a start state, a transition on a token and
/// the next-token log-probabilities held by a state.
template <typename M>
concept SearchModel = requires(const M& m, const typename M::State& s, std::size_t tok) {
  { m.initial() } -> std::same_as<typename M::State>;
  { m.extend(s, tok) } -> std::same_as<typename M::State>;
  { m.log_probs(s) } -> std::convertible_to<std::span<const double>>;
  { m.end_token() } -> std::convertible_to<std::size_t>;
  { m.allowed(tok) } -> std::convertible_to<bool>;
};

template <typename State>
struct SearchHypothesis {
  std::vector<std::size_t> tokens;  // ends with the end token when finished
  std::vector<double> step_log_probs;
  double score = 0.0;
  State state;  // state after the last non-end token
  bool finished = false;
};

template <typename State>
struct SearchResult {
  std::vector<SearchHypothesis<State>> hyps;  // best first
  bool truncated = false;
};

namespace detail {

inline void check_search_args(std::size_t beam, std::size_t max_length) {
  if (beam == 0) throw ContractError("beam size must be at least 1");
  if (max_length == 0) throw ContractError("max length must be at least 1");
}

}  // namespace detail

/// Argmax token per step, lowest id on ties.
template <SearchModel M>
SearchResult<typename M::State> greedy_search(const M& model, std::size_t max_length) {
  detail::check_search_args(1, max_length);
  SearchHypothesis<typename M::State> hyp{{}, {}, 0.0, model.initial(), false};
  for (std::size_t t = 0; t < max_length; ++t) {
    const std::span<const double> lp = model.log_probs(hyp.state);
    std::size_t best = lp.size();
    for (std::size_t k = 0; k < lp.size(); ++k) {
      if (model.allowed(k) && (best == lp.size() || lp[k] > lp[best])) best = k;
    }
    if (best == lp.size()) throw ContractError("no token is allowed");
    hyp.tokens.push_back(best);
    hyp.step_log_probs.push_back(lp[best]);
    hyp.score += lp[best];
    if (best == model.end_token()) {
      hyp.finished = true;
      return {{std::move(hyp)}, false};
    }
    hyp.state = model.extend(hyp.state, best);
  }
  return {{std::move(hyp)}, true};
}

/// Beam search by total log-probability. Finished hypotheses are set aside
/// and the beam refills from the next-best candidates; the search ends when
/// no live hypothesis can beat the worst kept finished one, or at max_length.
/// Without any finished hypothesis the best live one is returned, flagged.
template <SearchModel M>
SearchResult<typename M::State> beam_search(const M& model, std::size_t beam, std::size_t max_length) {
  detail::check_search_args(beam, max_length);
  using Hyp = SearchHypothesis<typename M::State>;
  std::vector<Hyp> live{Hyp{{}, {}, 0.0, model.initial(), false}};
  std::vector<Hyp> finished;
  const auto better = [](const Hyp& a, const Hyp& b) { return a.score > b.score; };

  struct Candidate {
    double score;
    double log_prob;
    std::size_t parent;
    std::size_t token;
  };
  for (std::size_t t = 0; t < max_length && !live.empty(); ++t) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const std::span<const double> lp = model.log_probs(live[i].state);
      for (std::size_t k = 0; k < lp.size(); ++k) {
        if (model.allowed(k)) cands.push_back({live[i].score + lp[k], lp[k], i, k});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });

    std::vector<Hyp> next;
    for (const Candidate& c : cands) {
      if (next.size() == beam) break;
      const Hyp& parent = live[c.parent];
      Hyp h{parent.tokens, parent.step_log_probs, c.score, {}, false};
      h.tokens.push_back(c.token);
      h.step_log_probs.push_back(c.log_prob);
      if (c.token == model.end_token()) {
        h.state = parent.state;
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        h.state = model.extend(parent.state, c.token);
        next.push_back(std::move(h));
      }
    }
    std::stable_sort(finished.begin(), finished.end(), better);
    if (finished.size() > beam) finished.resize(beam);
    live = std::move(next);
    if (finished.size() >= beam && !live.empty() && live.front().score <= finished.back().score) break;
    if (finished.size() >= beam && live.empty()) break;
  }

  if (!finished.empty()) return {std::move(finished), false};
  std::stable_sort(live.begin(), live.end(), better);
  live.resize(1);
  return {std::move(live), true};
}

/// Search adapter over a trained model for one SR. Each placeholder token is
/// resolved by attention on the state that emitted it; its distributions
/// feed the next step.
class NlgSearch {
 public:
  struct State {
    Tensor h, c, s;
    std::vector<double> log_probs;
    std::vector<std::string> surfaces;  // delexicalized tokens emitted so far
    AttentionTrace trace;
    std::map<Triple, int> emitted;
  };

  NlgSearch(const Model& model, const SemanticRepresentation& sr);

  State initial() const;
  State extend(const State& state, std::size_t token) const;
  std::span<const double> log_probs(const State& s) const { return s.log_probs; }
  std::size_t end_token() const { return model_.vocab().eos(); }
  bool allowed(std::size_t token) const { return token != model_.vocab().bos(); }

 private:
  struct Keys {
    std::vector<std::size_t> labels;
    Tensor keys;
    std::size_t universe = 0;
  };
  State advance(const State& prev, std::size_t token, bool first) const;

  const Model& model_;
  const SemanticRepresentation& sr_;
  Tensor f_sr_;
  std::vector<Keys> keys_;  // domain, act, slot
};

struct GeneratedHypothesis {
  std::vector<std::string> tokens;  // delexicalized, without the end token
  std::string delex;
  std::string text;
  std::vector<std::string> unresolved;  // slot tokens the SR could not fill
  double score = 0.0;
  std::vector<double> step_log_probs;
  AttentionTrace trace;
  bool finished = false;
};

struct GenerationResult {
  std::vector<GeneratedHypothesis> hyps;  // best first
  bool truncated = false;
};

GenerationResult beam_decode(const Model& model, const SemanticRepresentation& sr, std::size_t beam,
                             std::size_t max_length);
GenerationResult greedy_decode(const Model& model, const SemanticRepresentation& sr, std::size_t max_length);

/// Lexicalizes every hypothesis against the SR; unknown slot tokens stay
/// verbatim and are listed in `unresolved`.
void render(GenerationResult& result, const SemanticRepresentation& sr, const Ontology& ontology);

/// {"sr": ..., "hyps": [{"delex", "text", "score"}], "trace": ...}
nlohmann::json to_json(const GenerationResult& result, const SemanticRepresentation& sr, const Ontology& ontology);

}  // namespace treenlg
