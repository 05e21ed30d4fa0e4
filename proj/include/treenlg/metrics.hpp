// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/corpus.hpp"
#include "treenlg/ontology.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

/// Slot error counts. Only informable (token-producing) entries count.
struct SerCounts {
  std::size_t missing = 0;    // p
  std::size_t redundant = 0;  // q
  std::size_t required = 0;   // N
  /// (p + q) / N; with N = 0 the rate is q.
  double rate() const;
  SerCounts& operator+=(const SerCounts& o);
  bool operator==(const SerCounts&) const = default;
};

/// Compares the slot tokens of a delexicalized hypothesis with those the SR
/// licenses, as multisets.
SerCounts ser(const SemanticRepresentation& sr, const Ontology& ontology, const std::vector<std::string>& hyp_tokens);
SerCounts ser(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view delex_text);

struct BleuReport {
  double score = 0.0;
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

/// Corpus BLEU-4 with uniform weights; a zero match count becomes 1e-9.
/// Throws ContractError for an empty corpus or unequal list lengths.
BleuReport bleu(const std::vector<std::vector<std::string>>& hyps, const std::vector<std::vector<std::string>>& refs);
nlohmann::json to_json(const BleuReport& r);

struct MetricRow {
  std::string mode;
  double fraction = 0.0;
  double ser = 0.0;
  double bleu = 0.0;
};

struct AggregateRow {
  std::string mode;
  double fraction = 0.0;
  std::size_t count = 0;
  double ser_mean = 0.0;
  double ser_sd = 0.0;  // population
  double bleu_mean = 0.0;
  double bleu_sd = 0.0;
};

/// Mean and population sd per (mode, fraction), sorted by mode then fraction.
/// The output does not depend on the input order.
std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows);

/// Mean and population sd of a sample; values are summed in sorted order.
std::pair<double, double> mean_sd(std::vector<double> values);

struct SeenUnseen {
  std::vector<const Example*> seen;
  std::vector<const Example*> unseen;
};

/// A test example is seen when its SR occurs among the training SRs. With
/// `match_values` false only the delexicalized SR is compared.
SeenUnseen seen_unseen_split(const std::vector<const Example*>& test, const std::vector<const Example*>& train,
                             const Ontology& ontology, bool match_values = true);

}  // namespace treenlg
