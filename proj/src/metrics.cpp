// SPDX-License-Identifier: Apache-2.0
#include "treenlg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "treenlg/error.hpp"

namespace treenlg {

double SerCounts::rate() const {
  if (required == 0) return static_cast<double>(redundant);
  return static_cast<double>(missing + redundant) / static_cast<double>(required);
}

SerCounts& SerCounts::operator+=(const SerCounts& o) {
  missing += o.missing;
  redundant += o.redundant;
  required += o.required;
  return *this;
}

SerCounts ser(const SemanticRepresentation& sr, const Ontology& ontology, const std::vector<std::string>& hyp_tokens) {
  std::map<std::string, long> balance;  // reference minus hypothesis
  SerCounts out;
  for (const auto& lt : licensed_tokens(sr, ontology)) {
    ++balance[lt.token.surface()];
    ++out.required;
  }
  for (const auto& t : hyp_tokens) {
    if (is_slot_token(t)) --balance[t];
  }
  for (const auto& [tok, b] : balance) {
    if (b > 0) out.missing += static_cast<std::size_t>(b);
    if (b < 0) out.redundant += static_cast<std::size_t>(-b);
  }
  return out;
}

SerCounts ser(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view delex_text) {
  return ser(sr, ontology, tokenize(delex_text));
}

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> ngrams(const std::vector<std::string>& s, std::size_t n) {
  std::map<Gram, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Gram(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

BleuReport bleu(const std::vector<std::vector<std::string>>& hyps, const std::vector<std::vector<std::string>>& refs) {
  if (hyps.empty()) throw ContractError("BLEU of an empty corpus");
  if (hyps.size() != refs.size()) {
    throw ContractError("BLEU needs one reference per hypothesis (" + std::to_string(hyps.size()) + " vs " +
                        std::to_string(refs.size()) + ")");
  }
  constexpr double kEpsilon = 1e-9;
  std::array<double, 4> matches{};
  std::array<double, 4> totals{};
  BleuReport r;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    r.hyp_length += hyps[k].size();
    r.ref_length += refs[k].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hyps[k], n);
      const auto ref = ngrams(refs[k], n);
      for (const auto& [g, c] : h) {
        auto it = ref.find(g);
        if (it != ref.end()) matches[n - 1] += static_cast<double>(std::min(c, it->second));
        totals[n - 1] += static_cast<double>(c);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double m = matches[n] > 0.0 ? matches[n] : kEpsilon;
    r.precisions[n] = m / std::max(totals[n], 1.0);
    log_sum += std::log(r.precisions[n]);
  }
  if (r.hyp_length == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_length > r.ref_length) {
    r.brevity_penalty = 1.0;
  } else {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_length) / static_cast<double>(r.hyp_length));
  }
  r.score = r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

nlohmann::json to_json(const BleuReport& r) {
  return {{"bleu", r.score},
          {"precisions", r.precisions},
          {"brevity_penalty", r.brevity_penalty},
          {"hyp_length", r.hyp_length},
          {"ref_length", r.ref_length}};
}

std::pair<double, double> mean_sd(std::vector<double> values) {
  if (values.empty()) return {0.0, 0.0};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  std::map<std::pair<std::string, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.mode, r.fraction}];
    g.first.push_back(r.ser);
    g.second.push_back(r.bleu);
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, g] : groups) {
    AggregateRow a;
    a.mode = key.first;
    a.fraction = key.second;
    a.count = g.first.size();
    std::tie(a.ser_mean, a.ser_sd) = mean_sd(g.first);
    std::tie(a.bleu_mean, a.bleu_sd) = mean_sd(g.second);
    out.push_back(std::move(a));
  }
  return out;
}

SeenUnseen seen_unseen_split(const std::vector<const Example*>& test, const std::vector<const Example*>& train,
                             const Ontology& ontology, bool match_values) {
  auto key = [&](const Example& e) { return match_values ? e.sr.canonical() : e.sr.delexicalized_key(ontology); };
  std::set<std::vector<SemanticEntry>> known;
  for (const Example* e : train) known.insert(key(*e));
  SeenUnseen out;
  for (const Example* e : test) (known.count(key(*e)) ? out.seen : out.unseen).push_back(e);
  return out;
}

}  // namespace treenlg
