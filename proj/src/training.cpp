// SPDX-License-Identifier: Apache-2.0
#include "treenlg/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "treenlg/error.hpp"
#include "treenlg/generation.hpp"

namespace treenlg {

std::vector<std::string> reference_tokens(const Example& e, const Ontology& ontology) {
  return tokenize(delexicalize(e.sr, ontology, e.text).text);
}

std::vector<std::string> target_tokens(const Example& e, const Ontology& ontology, Mode mode) {
  auto toks = reference_tokens(e, ontology);
  if (uses_attention(mode)) {
    for (auto& t : toks) {
      if (is_slot_token(t)) t = std::string(Vocabulary::kPlaceholder);
    }
  }
  return toks;
}

Vocabulary build_vocabulary(const std::vector<const Example*>& examples, const Ontology& ontology, Mode mode) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(examples.size());
  for (const Example* e : examples) sentences.push_back(target_tokens(*e, ontology, mode));
  return Vocabulary::build(sentences, uses_attention(mode));
}

Supervision supervise(const Example& e, const Ontology& ontology, const Vocabulary& vocab, Mode mode) {
  std::map<std::string, Triple> licensed;
  for (const auto& lt : licensed_tokens(e.sr, ontology)) licensed.emplace(lt.token.surface(), lt.token.triple);

  Supervision sup;
  for (const auto& tok : reference_tokens(e, ontology)) {
    if (uses_attention(mode) && is_slot_token(tok)) {
      sup.targets.push_back(vocab.placeholder());
      ++sup.placeholders;
      auto it = licensed.find(tok);
      if (it == licensed.end()) {
        sup.labels.push_back(std::nullopt);
        sup.label_noise = true;
      } else {
        const Triple& t = it->second;
        sup.labels.push_back(LabelIndices{ontology.domain_index(t.domain).value(), ontology.act_index(t.act).value(),
                                          ontology.slot_index(t.slot).value()});
      }
    } else {
      sup.targets.push_back(vocab.id(tok));
      sup.labels.push_back(std::nullopt);
    }
  }
  sup.targets.push_back(vocab.eos());
  sup.labels.push_back(std::nullopt);
  return sup;
}

Var nll_loss(std::span<const Var> log_probs, std::span<const std::size_t> targets) {
  if (log_probs.size() != targets.size() || targets.empty()) {
    throw ContractError("nll_loss needs one distribution per target (" + std::to_string(log_probs.size()) + " vs " +
                        std::to_string(targets.size()) + ")");
  }
  Var total;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] >= log_probs[t].value().size()) {
      throw ContractError("target id " + std::to_string(targets[t]) + " outside a vocabulary of " +
                          std::to_string(log_probs[t].value().size()));
    }
    Var lp = ops::pick(log_probs[t], targets[t]);
    total = t == 0 ? lp : ops::add(total, lp);
  }
  return ops::scale(total, -1.0);
}

Var att_loss(Var nll, std::span<const LabeledAttention> steps) {
  Var total = nll;
  for (const auto& s : steps) {
    const std::array<Var, 3> dists{s.dists.domain, s.dists.act, s.dists.slot};
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t label = s.labels[k];
      if (label >= dists[k].value().size() || !(dists[k].value()[label] > 0.0)) {
        throw ContractError("true attention label outside the activated support");
      }
      total = ops::sub(total, ops::log(ops::pick(dists[k], label)));
    }
  }
  return total;
}

SentenceLoss sentence_loss(Tape& tape, const Model& model, const Model::Bound& bound, const SemanticRepresentation& sr,
                           const Supervision& sup, const Dropout& dropout, bool attention_loss) {
  const auto enc = model.encode(tape, bound, sr);
  DecoderState state = initial_state(tape, enc.f_sr);
  const Vocabulary& vocab = model.vocab();
  std::size_t prev = vocab.bos();
  std::optional<AttentionDists> feedback;
  std::vector<Var> log_probs;
  std::vector<LabeledAttention> labeled;
  for (std::size_t t = 0; t < sup.targets.size(); ++t) {
    Var x = make_feedback_input(tape, prev, feedback ? &*feedback : nullptr, bound.decoder, dropout);
    const StepResult out = step(state, x, bound.decoder, dropout);
    log_probs.push_back(ops::log_softmax(out.logits));
    state = out.state;
    feedback.reset();
    const std::size_t y = sup.targets[t];
    if (enc.keys && vocab.has_placeholder() && y == vocab.placeholder()) {
      feedback = attend(state.s, *enc.keys);
      if (sup.labels[t]) labeled.push_back({*feedback, *sup.labels[t]});
    }
    prev = y;
  }
  SentenceLoss out;
  out.nll = nll_loss(log_probs, sup.targets);
  out.loss = attention_loss ? att_loss(out.nll, labeled) : out.nll;
  return out;
}

double mean_loss(const Model& model, const std::vector<const Example*>& examples) {
  if (examples.empty()) throw ContractError("mean loss over no examples");
  double total = 0.0;
  for (const Example* e : examples) {
    Tape tape;
    const auto bound = model.bind(tape, false);
    const auto sup = supervise(*e, model.ontology(), model.vocab(), model.mode());
    total += sentence_loss(tape, model, bound, e->sr, sup, {}, uses_attention(model.mode())).loss.value()[0];
  }
  return total / static_cast<double>(examples.size());
}

EvalSummary evaluate(const Model& model, const std::vector<const Example*>& examples, std::size_t beam,
                     std::size_t max_length) {
  if (examples.empty()) throw ContractError("evaluation over no examples");
  EvalSummary s;
  s.examples = examples.size();
  SerCounts topk;
  std::vector<std::vector<std::string>> hyps, refs, hyps_k, refs_k;
  for (const Example* e : examples) {
    const GenerationResult r =
        beam == 1 ? greedy_decode(model, e->sr, max_length) : beam_decode(model, e->sr, beam, max_length);
    const auto ref = reference_tokens(*e, model.ontology());
    if (r.truncated) ++s.truncated;
    s.counts += ser(e->sr, model.ontology(), r.hyps.front().tokens);
    hyps.push_back(r.hyps.front().tokens);
    refs.push_back(ref);
    for (const auto& h : r.hyps) {
      topk += ser(e->sr, model.ontology(), h.tokens);
      hyps_k.push_back(h.tokens);
      refs_k.push_back(ref);
    }
  }
  s.ser = s.counts.rate();
  s.bleu = bleu(hyps, refs).score;
  s.ser_topk = topk.rate();
  s.bleu_topk = bleu(hyps_k, refs_k).score;
  return s;
}

nlohmann::json to_json(const EvalSummary& s) {
  return {{"examples", s.examples},  {"ser", s.ser},
          {"bleu", s.bleu},          {"ser_topk", s.ser_topk},
          {"bleu_topk", s.bleu_topk}, {"missing", s.counts.missing},
          {"redundant", s.counts.redundant}, {"required", s.counts.required},
          {"truncated", s.truncated}};
}

nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_ser", e.dev_ser}, {"dev_bleu", e.dev_bleu}};
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

TrainResult fit(Model model, const std::vector<const Example*>& train, const std::vector<const Example*>& dev,
                const TrainConfig& config, double learning_rate, const EpochCallback& callback) {
  config.validate();
  if (train.empty()) throw ConfigError("training split is empty");
  if (dev.empty()) throw ConfigError("dev split is empty");

  TrainResult result{Checkpoint{model, config, 0, 0.0, 0.0}, {}, 0};
  std::vector<Supervision> sups;
  sups.reserve(train.size());
  for (const Example* e : train) {
    sups.push_back(supervise(*e, model.ontology(), model.vocab(), model.mode()));
    if (sups.back().label_noise) ++result.noisy_sentences;
  }

  Rng rng(config.seed);
  AdamState adam(model.params(), AdamConfig{learning_rate});
  const bool attention_loss = uses_attention(model.mode());
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::optional<ParamSet> best_params;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    const Dropout dropout{config.dropout, true, &rng};
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<Tensor> grads = model.params().zeros_like();
      for (std::size_t k = start; k < stop; ++k) {
        Tape tape;
        const auto bound = model.bind(tape, true);
        const auto sl = sentence_loss(tape, model, bound, train[order[k]]->sr, sups[order[k]], dropout, attention_loss);
        tape.backward(sl.loss);
        accumulate_param_grads(tape, grads);
        total += sl.loss.value()[0];
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) {
        for (auto& v : g.data()) v *= inv;
      }
      clip_global_norm(grads, config.clip_norm);
      adam_step(model.params().tensors(), grads, adam);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = total / static_cast<double>(train.size());
    const EvalSummary ev = evaluate(model, dev, 1, config.max_length);
    log.dev_ser = ev.ser;
    log.dev_bleu = ev.bleu;
    result.log.push_back(log);

    Checkpoint& best = result.best;
    if (!best_params || log.dev_ser < best.dev_ser || (log.dev_ser == best.dev_ser && log.dev_bleu > best.dev_bleu)) {
      best_params = model.params();
      best.epoch = epoch;
      best.dev_ser = log.dev_ser;
      best.dev_bleu = log.dev_bleu;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (callback && !callback(log, model)) break;
    if (since_best >= config.patience) break;
  }
  result.best.model = Model(model.mode(), model.ontology(), model.vocab(), model.hidden(), std::move(*best_params));
  return result;
}

TrainResult train(const Corpus& corpus, const TrainConfig& config, const Ontology& ontology,
                  const EpochCallback& callback) {
  config.validate();
  const auto tr = corpus.select(Split::train);
  const auto dv = corpus.select(Split::dev);
  if (tr.empty()) throw ConfigError("training split is empty");
  if (dv.empty()) throw ConfigError("dev split is empty");
  Model model(config.mode, ontology, build_vocabulary(tr, ontology, config.mode), config.hidden, config.seed);
  return fit(std::move(model), tr, dv, config, config.learning_rate, callback);
}

std::vector<const Example*> sample_adaptation(const std::vector<const Example*>& pool, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("adaptation fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pool.size()) - 1e-9));
  if (n == 0) throw ConfigError("adaptation fraction selects no examples");
  std::vector<const Example*> picked = pool;
  Rng rng(seed);
  shuffle(picked, rng);
  picked.resize(n);
  std::sort(picked.begin(), picked.end(), [](const Example* a, const Example* b) { return a->record < b->record; });
  return picked;
}

TrainResult adapt(const Checkpoint& source, const Corpus& corpus, const std::string& target, double fraction,
                  const TrainConfig& config, std::uint64_t seed) {
  if (!source.model.ontology().has_domain(target)) throw ConfigError("unknown target domain " + target);
  const auto sample = sample_adaptation(corpus.select(Split::train, target), fraction, seed);
  TrainConfig cfg = config;
  cfg.mode = source.model.mode();
  cfg.hidden = source.model.hidden();
  cfg.seed = seed;
  return fit(source.model, sample, corpus.select(Split::dev, target), cfg, cfg.adapt_learning_rate);
}

double DataQuality::unmatched_rate() const {
  return informable_values == 0 ? 0.0 : static_cast<double>(unmatched_values) / static_cast<double>(informable_values);
}

DataQuality data_quality(const Corpus& corpus, const Ontology& ontology) {
  DataQuality q;
  q.records = corpus.size();
  q.multi_domain = corpus.multi_domain_count();
  q.distinct_srs = distinct_sr_counts(corpus, ontology);
  for (const auto& e : corpus.examples) {
    const auto licensed = licensed_tokens(e.sr, ontology);
    q.informable_values += licensed.size();
    const auto d = delexicalize(e.sr, ontology, e.text);
    q.unmatched_values += d.unmatched.size();
    std::set<std::string> surfaces;
    for (const auto& lt : licensed) surfaces.insert(lt.token.surface());
    for (const auto& t : tokenize(d.text)) {
      if (is_slot_token(t) && !surfaces.count(t)) {
        ++q.noisy_sentences;
        break;
      }
    }
  }
  return q;
}

nlohmann::json to_json(const DataQuality& q) {
  return {{"records", q.records},
          {"multi_domain_turns", q.multi_domain},
          {"informable_values", q.informable_values},
          {"unmatched_values", q.unmatched_values},
          {"unmatched_value_rate", q.unmatched_rate()},
          {"label_noise_sentences", q.noisy_sentences},
          {"distinct_sr", q.distinct_srs}};
}

MatrixResult run_matrix(const Corpus& corpus, const Ontology& ontology, const MatrixSpec& spec,
                        const MatrixProgress& progress) {
  if (spec.fractions.empty()) throw ConfigError("sweep needs at least one fraction");
  if (spec.seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (spec.modes.empty()) throw ConfigError("sweep needs at least one mode");
  for (const auto& d : {spec.source, spec.target}) {
    if (!ontology.has_domain(d)) throw ConfigError("unknown domain " + d);
  }
  spec.config.validate();

  const auto all_train = corpus.select(Split::train);
  const auto src_train = corpus.select(Split::train, spec.source);
  const auto src_dev = corpus.select(Split::dev, spec.source);
  const auto tgt_pool = corpus.select(Split::train, spec.target);
  const auto tgt_dev = corpus.select(Split::dev, spec.target);
  const auto tgt_test = corpus.select(Split::test, spec.target);
  if (tgt_test.empty()) throw ConfigError("target test split is empty");

  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  MatrixResult out;
  for (Mode mode : spec.modes) {
    TrainConfig cfg = spec.config;
    cfg.mode = mode;
    Model fresh(mode, ontology, build_vocabulary(all_train, ontology, mode), cfg.hidden, cfg.seed);
    const TrainResult source = fit(std::move(fresh), src_train, src_dev, cfg, cfg.learning_rate);
    say(std::string(to_string(mode)) + " source: epoch " + std::to_string(source.best.epoch) + ", dev SER " +
        std::to_string(source.best.dev_ser));

    std::uint64_t cell = 0;
    for (double fraction : spec.fractions) {
      for (std::uint64_t seed : spec.seeds) {
        const auto sample = sample_adaptation(tgt_pool, fraction, seed);
        TrainConfig tcfg = cfg;
        tcfg.seed = seed ^ cell;
        const TrainResult adapted = fit(source.best.model, sample, tgt_dev, tcfg, cfg.adapt_learning_rate);
        const EvalSummary ev = evaluate(adapted.best.model, tgt_test, spec.eval_beam, cfg.max_length);
        MatrixRow row;
        row.mode = std::string(to_string(mode));
        row.source = spec.source;
        row.target = spec.target;
        row.fraction = fraction;
        row.seed = std::to_string(seed);
        row.ser = ev.ser;
        row.bleu = ev.bleu;
        row.ser_topk = ev.ser_topk;
        row.bleu_topk = ev.bleu_topk;
        say(row.mode + " fraction " + std::to_string(fraction) + " seed " + row.seed + ": " +
            std::to_string(sample.size()) + " examples, test SER " + std::to_string(ev.ser));
        out.rows.push_back(std::move(row));
        ++cell;
      }
    }
  }

  for (Mode mode : spec.modes) {
    const std::string name(to_string(mode));
    std::vector<double> fractions = spec.fractions;
    std::sort(fractions.begin(), fractions.end());
    fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
    for (double f : fractions) {
      std::vector<double> sers, bleus, sers_k, bleus_k;
      for (const auto& r : out.rows) {
        if (r.mode == name && r.fraction == f) {
          sers.push_back(r.ser);
          bleus.push_back(r.bleu);
          sers_k.push_back(r.ser_topk);
          bleus_k.push_back(r.bleu_topk);
        }
      }
      MatrixRow a;
      a.mode = name;
      a.source = spec.source;
      a.target = spec.target;
      a.fraction = f;
      a.seed = "mean";
      std::tie(a.ser, a.ser_sd) = mean_sd(sers);
      std::tie(a.bleu, a.bleu_sd) = mean_sd(bleus);
      a.ser_topk = mean_sd(sers_k).first;
      a.bleu_topk = mean_sd(bleus_k).first;
      out.aggregates.push_back(std::move(a));
    }
  }
  return out;
}

namespace {

constexpr const char* kHeader = "mode,source,target,fraction,seed,ser,bleu,ser_sd,bleu_sd,ser_top10,bleu_top10";

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

void write_results_csv(std::ostream& out, const MatrixResult& r) {
  out << kHeader << '\n';
  auto line = [&](const MatrixRow& row, bool aggregate) {
    out << row.mode << ',' << row.source << ',' << row.target << ',' << num(row.fraction) << ',' << row.seed << ','
        << num(row.ser) << ',' << num(row.bleu) << ',' << (aggregate ? num(row.ser_sd) : "") << ','
        << (aggregate ? num(row.bleu_sd) : "") << ',' << num(row.ser_topk) << ',' << num(row.bleu_topk) << '\n';
  };
  for (const auto& row : r.rows) line(row, false);
  for (const auto& row : r.aggregates) line(row, true);
}

MatrixResult read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw ParseError("results file lacks the expected header");
  MatrixResult r;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 11) throw ParseError("results line " + std::to_string(lineno) + ": expected 11 columns");
    auto d = [&](const std::string& s) {
      if (s.empty()) return 0.0;
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ParseError("results line " + std::to_string(lineno) + ": bad number " + s);
      }
    };
    MatrixRow row{f[0], f[1], f[2], d(f[3]), f[4], d(f[5]), d(f[6]), d(f[7]), d(f[8]), d(f[9]), d(f[10])};
    (row.seed == "mean" ? r.aggregates : r.rows).push_back(std::move(row));
  }
  return r;
}

}  // namespace treenlg
