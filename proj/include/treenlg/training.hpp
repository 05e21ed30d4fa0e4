// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/checkpoint.hpp"
#include "treenlg/config.hpp"
#include "treenlg/corpus.hpp"
#include "treenlg/decoder.hpp"
#include "treenlg/metrics.hpp"
#include "treenlg/model.hpp"

namespace treenlg {

/// Delexicalized target tokens in the form `mode` generates: slot tokens are
/// "@" for attention models and composite "@domain-act-slot" otherwise.
/// Does not include the end token.
std::vector<std::string> target_tokens(const Example& e, const Ontology& ontology, Mode mode);

/// Reference tokens for BLEU and SER: delexicalized, composite slot tokens.
std::vector<std::string> reference_tokens(const Example& e, const Ontology& ontology);

/// Vocabulary over the target tokens of `examples`.
Vocabulary build_vocabulary(const std::vector<const Example*>& examples, const Ontology& ontology, Mode mode);

using LabelIndices = std::array<std::size_t, 3>;  // domain, act, slot (canonical)

/// Target ids (ending with the end token) and, per placeholder position, the
/// true labels. A placeholder whose slot token the SR does not license has
/// no label and marks the sentence as noisy.
struct Supervision {
  std::vector<std::size_t> targets;
  std::vector<std::optional<LabelIndices>> labels;  // parallel to targets
  std::size_t placeholders = 0;
  bool label_noise = false;
};

Supervision supervise(const Example& e, const Ontology& ontology, const Vocabulary& vocab, Mode mode);

/// -sum_t log p(y_t). `log_probs` holds one log-distribution per target.
/// Throws ContractError for a target outside the vocabulary.
Var nll_loss(std::span<const Var> log_probs, std::span<const std::size_t> targets);

struct LabeledAttention {
  AttentionDists dists;
  LabelIndices labels;
};

/// nll - sum over placeholder steps of log p(d) + log p(a) + log p(s) at the
/// true labels. Throws ContractError for a label with zero probability.
Var att_loss(Var nll, std::span<const LabeledAttention> steps);

struct SentenceLoss {
  Var nll;
  Var loss;  // nll, or the attention objective when requested
};

/// Teacher-forced forward pass of one sentence on `tape`.
SentenceLoss sentence_loss(Tape& tape, const Model& model, const Model::Bound& bound, const SemanticRepresentation& sr,
                           const Supervision& sup, const Dropout& dropout, bool attention_loss);

/// Mean sentence loss over `examples` with dropout off.
double mean_loss(const Model& model, const std::vector<const Example*>& examples);

struct EvalSummary {
  std::size_t examples = 0;
  SerCounts counts;  // top-1
  double ser = 0.0;
  double bleu = 0.0;
  double ser_topk = 0.0;  // over every returned hypothesis
  double bleu_topk = 0.0;
  std::size_t truncated = 0;
};

/// Decodes every example (greedy when beam == 1) and scores the
/// delexicalized outputs.
EvalSummary evaluate(const Model& model, const std::vector<const Example*>& examples, std::size_t beam,
                     std::size_t max_length);
nlohmann::json to_json(const EvalSummary& s);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_ser = 0.0;
  double dev_bleu = 0.0;
  bool operator==(const EpochLog&) const = default;
};
nlohmann::json to_json(const EpochLog& e);

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  std::size_t noisy_sentences = 0;
};

/// Called after each epoch with the current (not the best) model. Returning
/// false stops training.
using EpochCallback = std::function<bool(const EpochLog&, const Model&)>;

/// Adam training of `model` on `train` with early stopping on dev SER (ties
/// by BLEU, then the earlier epoch). Throws ConfigError on an empty split.
TrainResult fit(Model model, const std::vector<const Example*>& train, const std::vector<const Example*>& dev,
                const TrainConfig& config, double learning_rate, const EpochCallback& callback = {});

/// From scratch on the corpus train and dev splits; the vocabulary comes
/// from the train split.
TrainResult train(const Corpus& corpus, const TrainConfig& config, const Ontology& ontology,
                  const EpochCallback& callback = {});

/// ceil(fraction * |pool|) examples drawn without replacement. Throws
/// ConfigError when the fraction is outside (0, 1] or selects nothing.
std::vector<const Example*> sample_adaptation(const std::vector<const Example*>& pool, double fraction,
                                              std::uint64_t seed);

/// Fine-tunes every parameter on a sample of the single-domain target
/// train split at the adaptation learning rate; early-stops on target dev.
TrainResult adapt(const Checkpoint& source, const Corpus& corpus, const std::string& target, double fraction,
                  const TrainConfig& config, std::uint64_t seed);

struct DataQuality {
  std::size_t records = 0;
  std::size_t multi_domain = 0;
  std::size_t informable_values = 0;
  std::size_t unmatched_values = 0;
  std::size_t noisy_sentences = 0;  // slot tokens without a true attention label
  std::map<std::string, std::size_t> distinct_srs;
  double unmatched_rate() const;
};
DataQuality data_quality(const Corpus& corpus, const Ontology& ontology);
nlohmann::json to_json(const DataQuality& q);

struct MatrixSpec {
  std::string source;
  std::string target;
  std::vector<double> fractions;
  std::vector<std::uint64_t> seeds;
  std::vector<Mode> modes;
  TrainConfig config;
  std::size_t eval_beam = 10;
};

struct MatrixRow {
  std::string mode;
  std::string source;
  std::string target;
  double fraction = 0.0;
  std::string seed;  // "mean" on aggregate rows
  double ser = 0.0;
  double bleu = 0.0;
  double ser_sd = 0.0;
  double bleu_sd = 0.0;
  double ser_topk = 0.0;
  double bleu_topk = 0.0;
  bool operator==(const MatrixRow&) const = default;
};

struct MatrixResult {
  std::vector<MatrixRow> rows;        // one per (mode, fraction, seed)
  std::vector<MatrixRow> aggregates;  // one per (mode, fraction)
  bool operator==(const MatrixResult&) const = default;
};

using MatrixProgress = std::function<void(const std::string&)>;

/// One source model per mode (config.seed), then adapt + evaluate on the
/// target test split per (mode, fraction, seed). The sample is drawn with
/// the cell's seed; training randomness uses seed XOR cell index.
MatrixResult run_matrix(const Corpus& corpus, const Ontology& ontology, const MatrixSpec& spec,
                        const MatrixProgress& progress = {});

void write_results_csv(std::ostream& out, const MatrixResult& r);
MatrixResult read_results_csv(std::istream& in);

}  // namespace treenlg
