// SPDX-License-Identifier: Apache-2.0
#include "treenlg/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "treenlg/checkpoint.hpp"
#include "treenlg/corpus.hpp"
#include "treenlg/error.hpp"
#include "treenlg/generation.hpp"
#include "treenlg/gradcheck.hpp"
#include "treenlg/metrics.hpp"
#include "treenlg/synth.hpp"
#include "treenlg/training.hpp"

namespace treenlg {

namespace fs = std::filesystem;

namespace {

struct Paths {
  std::string ontology;
  std::string corpus;
  std::string checkpoint;
  std::string out;
  std::string config;
  std::string input;
  std::string hyps;
  std::string refs;
  std::string spec;
  std::string sr;
};

/// Flags that override TrainConfig fields. Unset flags leave the config alone.
struct Overrides {
  std::optional<std::size_t> hidden, layers, batch_size, max_epochs, patience, beam, max_length;
  std::optional<double> dropout, learning_rate, adapt_learning_rate, clip_norm;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;

  void attach(CLI::App* app) {
    app->add_option("--hidden", hidden, "hidden units");
    app->add_option("--layers", layers, "recurrent layers (1 only)");
    app->add_option("--dropout", dropout, "dropout rate");
    app->add_option("--learning_rate", learning_rate, "scratch learning rate");
    app->add_option("--adapt_learning_rate", adapt_learning_rate, "adaptation learning rate");
    app->add_option("--batch_size", batch_size, "examples per update");
    app->add_option("--max_epochs", max_epochs, "epoch cap");
    app->add_option("--patience", patience, "epochs without dev improvement before stopping");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--mode", mode, "tree+att, tree or flat");
    app->add_option("--clip_norm", clip_norm, "global gradient norm cap (0 disables)");
    app->add_option("--beam", beam, "beam size");
    app->add_option("--max_length", max_length, "maximum output tokens");
  }

  TrainConfig apply(TrainConfig c) const {
    if (hidden) c.hidden = *hidden;
    if (layers) c.layers = *layers;
    if (dropout) c.dropout = *dropout;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (adapt_learning_rate) c.adapt_learning_rate = *adapt_learning_rate;
    if (batch_size) c.batch_size = *batch_size;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (patience) c.patience = *patience;
    if (seed) c.seed = *seed;
    if (mode) {
      auto m = parse_mode(*mode);
      if (!m) throw ConfigError("unknown mode " + *mode);
      c.mode = *m;
    }
    if (clip_norm) c.clip_norm = *clip_norm;
    if (beam) c.beam = *beam;
    if (max_length) c.max_length = *max_length;
    return c;
  }
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing --") + what);
  if (!fs::is_regular_file(path)) throw ValidationError(path + ": no such " + what + " file");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

TrainConfig load_config(const Paths& p, const Overrides& o) {
  TrainConfig c;
  if (!p.config.empty()) {
    require_file(p.config, "config");
    c = config_from_json(read_json(p.config), c);
  }
  c = o.apply(c);
  c.validate();
  return c;
}

fs::path output_dir(const std::string& out) {
  if (out.empty()) throw ValidationError("missing --out");
  fs::create_directories(out);
  return out;
}

std::string jsonl(const std::vector<nlohmann::json>& lines) {
  std::string s;
  for (const auto& l : lines) s += l.dump() + "\n";
  return s;
}

/// Corpus-style JSONL, or generation output (first hypothesis), one per line.
struct TextRecord {
  SemanticRepresentation sr;
  std::string text;
  bool delexicalized = false;
};

std::vector<TextRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  std::vector<TextRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TextRecord r;
      r.sr = sr_from_json(j.at("sr"));
      if (j.contains("hyps")) {
        const auto& h = j.at("hyps");
        if (!h.is_array() || h.empty()) throw ParseError("empty hypothesis list");
        r.text = h.at(0).at("delex").get<std::string>();
        r.delexicalized = true;
      } else if (j.contains("delex")) {
        r.text = j.at("delex").get<std::string>();
        r.delexicalized = true;
      } else {
        r.text = j.at("text").get<std::string>();
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": record " + std::to_string(n) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ": record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: " + item);
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

struct Loaded {
  Ontology ontology;
  Corpus corpus;
};

Loaded load_inputs(const Paths& p) {
  require_file(p.ontology, "ontology");
  require_file(p.corpus, "corpus");
  Loaded l;
  l.ontology = Ontology::load(p.ontology);
  l.corpus = load_corpus(p.corpus, l.ontology);
  return l;
}

Checkpoint load_checked_checkpoint(const Paths& p, const Ontology& ontology) {
  require_file(p.checkpoint, "checkpoint");
  Checkpoint c = load_checkpoint(p.checkpoint);
  require_compatible(c, ontology);
  return c;
}

// ---- subcommands ----

int cmd_synth(const Paths& p, std::uint64_t seed, std::size_t distinct, std::size_t per_sr, std::ostream& out) {
  SynthSpec spec = default_synth_spec(distinct, per_sr);
  if (!p.spec.empty()) {
    require_file(p.spec, "spec");
    spec = SynthSpec::from_json(read_json(p.spec));
  }
  const fs::path dir = output_dir(p.out);
  const SynthResult r = synth_corpus(spec, seed);
  write_file_atomic(dir / "ontology.json", r.ontology.to_json().dump(2) + "\n");
  std::ostringstream corpus;
  write_corpus(corpus, r.corpus);
  write_file_atomic(dir / "corpus.jsonl", corpus.str());
  out << "wrote " << r.corpus.size() << " examples to " << (dir / "corpus.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_prepare(const Paths& p, std::ostream& out) {
  const Loaded in = load_inputs(p);
  const fs::path dir = output_dir(p.out);
  std::vector<nlohmann::json> lines;
  for (const auto& e : in.corpus.examples) {
    nlohmann::json j = to_json(e);
    j["delex"] = delexicalize(e.sr, in.ontology, e.text).text;
    lines.push_back(std::move(j));
  }
  write_file_atomic(dir / "delex.jsonl", jsonl(lines));
  const nlohmann::json report = to_json(data_quality(in.corpus, in.ontology));
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_train(const Paths& p, const Overrides& o, const std::vector<std::string>& domains, std::ostream& out,
              std::ostream& err) {
  const TrainConfig cfg = load_config(p, o);
  const Loaded in = load_inputs(p);
  const fs::path dir = output_dir(p.out);
  auto pick = [&](Split s) {
    if (domains.empty()) return in.corpus.select(s);
    std::vector<const Example*> v;
    for (const auto& d : domains) {
      if (!in.ontology.has_domain(d)) throw ConfigError("unknown domain " + d);
      auto part = in.corpus.select(s, d);
      v.insert(v.end(), part.begin(), part.end());
    }
    std::sort(v.begin(), v.end(), [](const Example* a, const Example* b) { return a->record < b->record; });
    return v;
  };
  const auto all_train = in.corpus.select(Split::train);
  if (all_train.empty()) throw ConfigError("training split is empty");
  Model model(cfg.mode, in.ontology, build_vocabulary(all_train, in.ontology, cfg.mode), cfg.hidden, cfg.seed);
  const TrainResult r = fit(std::move(model), pick(Split::train), pick(Split::dev), cfg, cfg.learning_rate,
                            [&](const EpochLog& log, const Model&) {
                              err << to_json(log).dump() << "\n";
                              return true;
                            });
  save_checkpoint(dir / "checkpoint.json", r.best);
  std::vector<nlohmann::json> lines;
  for (const auto& l : r.log) lines.push_back(to_json(l));
  write_file_atomic(dir / "epochs.jsonl", jsonl(lines));
  out << "best epoch " << r.best.epoch << ": dev SER " << r.best.dev_ser << ", dev BLEU " << r.best.dev_bleu << "\n";
  if (r.noisy_sentences > 0) out << r.noisy_sentences << " sentences without attention labels\n";
  return kExitOk;
}

int cmd_adapt(const Paths& p, const Overrides& o, const std::string& target, double fraction, std::ostream& out) {
  const Loaded in = load_inputs(p);
  const Checkpoint source = load_checked_checkpoint(p, in.ontology);
  // Stored config first, then the config file and flags on top.
  TrainConfig cfg = source.config;
  if (!p.config.empty()) {
    require_file(p.config, "config");
    cfg = config_from_json(read_json(p.config), cfg);
  }
  cfg = o.apply(cfg);
  cfg.validate();
  if (o.mode && cfg.mode != source.model.mode()) {
    throw ModeError("checkpoint is a " + std::string(to_string(source.model.mode())) + " model");
  }
  const fs::path dir = output_dir(p.out);
  const TrainResult r = adapt(source, in.corpus, target, fraction, cfg, cfg.seed);
  save_checkpoint(dir / "checkpoint.json", r.best);
  std::vector<nlohmann::json> lines;
  for (const auto& l : r.log) lines.push_back(to_json(l));
  write_file_atomic(dir / "epochs.jsonl", jsonl(lines));
  out << "best epoch " << r.best.epoch << ": target dev SER " << r.best.dev_ser << "\n";
  return kExitOk;
}

int cmd_generate(const Paths& p, const Overrides& o, const std::string& split, std::ostream& out) {
  require_file(p.ontology, "ontology");
  const Ontology ontology = Ontology::load(p.ontology);
  const Checkpoint c = load_checked_checkpoint(p, ontology);
  const TrainConfig cfg = o.apply(c.config);
  cfg.validate();
  std::vector<SemanticRepresentation> srs;
  if (!p.corpus.empty()) {
    require_file(p.corpus, "corpus");
    const Corpus corpus = load_corpus(p.corpus, ontology);
    auto s = parse_split(split);
    if (!s) throw ConfigError("unknown split " + split);
    for (const Example* e : corpus.select(*s)) srs.push_back(e->sr);
  } else {
    require_file(p.input, "input");
    for (auto& r : read_records(p.input)) {
      validate(r.sr, ontology);
      srs.push_back(std::move(r.sr));
    }
  }
  if (p.out.empty()) throw ValidationError("missing --out");
  std::vector<nlohmann::json> lines;
  for (const auto& sr : srs) {
    lines.push_back(to_json(beam_decode(c.model, sr, cfg.beam, cfg.max_length), sr, ontology));
  }
  write_file_atomic(p.out, jsonl(lines));
  out << "generated " << lines.size() << " outputs\n";
  return kExitOk;
}

int cmd_evaluate(const Paths& p, const Overrides& o, const std::string& split, std::ostream& out) {
  require_file(p.ontology, "ontology");
  const Ontology ontology = Ontology::load(p.ontology);
  nlohmann::json report;
  if (!p.checkpoint.empty()) {
    const Checkpoint c = load_checked_checkpoint(p, ontology);
    const TrainConfig cfg = o.apply(c.config);
    cfg.validate();
    require_file(p.corpus, "corpus");
    const Corpus corpus = load_corpus(p.corpus, ontology);
    auto s = parse_split(split);
    if (!s) throw ConfigError("unknown split " + split);
    const auto examples = corpus.select(*s);
    if (examples.empty()) throw ConfigError("split " + split + " is empty");
    report = to_json(evaluate(c.model, examples, cfg.beam, cfg.max_length));
    const auto seen = seen_unseen_split(examples, corpus.select(Split::train), ontology);
    report["seen"] = seen.seen.size();
    report["unseen"] = seen.unseen.size();
    if (!seen.seen.empty()) report["seen_ser"] = evaluate(c.model, seen.seen, cfg.beam, cfg.max_length).ser;
    if (!seen.unseen.empty()) report["unseen_ser"] = evaluate(c.model, seen.unseen, cfg.beam, cfg.max_length).ser;
  } else {
    require_file(p.hyps, "hyps");
    require_file(p.refs, "refs");
    const auto hyps = read_records(p.hyps);
    const auto refs = read_records(p.refs);
    if (hyps.size() != refs.size()) {
      throw ValidationError("hypothesis and reference files differ in length (" + std::to_string(hyps.size()) +
                            " vs " + std::to_string(refs.size()) + ")");
    }
    if (refs.empty()) throw ValidationError("no records to evaluate");
    SerCounts counts;
    std::vector<std::vector<std::string>> h, r;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      validate(refs[i].sr, ontology);
      auto delex = [&](const TextRecord& t) {
        return tokenize(t.delexicalized ? t.text : delexicalize(refs[i].sr, ontology, t.text).text);
      };
      h.push_back(delex(hyps[i]));
      r.push_back(delex(refs[i]));
      counts += ser(refs[i].sr, ontology, h.back());
    }
    report = to_json(bleu(h, r));
    report["ser"] = counts.rate();
    report["missing"] = counts.missing;
    report["redundant"] = counts.redundant;
    report["required"] = counts.required;
    report["examples"] = refs.size();
  }
  if (!p.out.empty()) write_file_atomic(p.out, report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep(const Paths& p, const Overrides& o, const std::string& source, const std::string& target,
              const std::string& fractions, const std::string& seeds, const std::string& modes,
              std::size_t eval_beam, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = load_config(p, o);
  const Loaded in = load_inputs(p);
  if (p.out.empty()) throw ValidationError("missing --out");
  MatrixSpec spec;
  spec.source = source;
  spec.target = target;
  spec.fractions = parse_list(fractions);
  for (double s : parse_list(seeds)) {
    if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) throw ConfigError("seeds must be integers");
    spec.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  std::stringstream ms(modes);
  std::string m;
  while (std::getline(ms, m, ',')) {
    auto mode = parse_mode(m);
    if (!mode) throw ConfigError("unknown mode " + m);
    spec.modes.push_back(*mode);
  }
  spec.config = cfg;
  spec.eval_beam = eval_beam == 0 ? cfg.beam : eval_beam;
  const MatrixResult r = run_matrix(in.corpus, in.ontology, spec, [&](const std::string& msg) { err << msg << "\n"; });
  std::ostringstream csv;
  write_results_csv(csv, r);
  write_file_atomic(p.out, csv.str());
  out << "wrote " << r.rows.size() << " rows and " << r.aggregates.size() << " aggregates to " << p.out << "\n";
  return kExitOk;
}

int cmd_trace(const Paths& p, const Overrides& o, std::ostream& out) {
  require_file(p.ontology, "ontology");
  const Ontology ontology = Ontology::load(p.ontology);
  const Checkpoint c = load_checked_checkpoint(p, ontology);
  if (!uses_attention(c.model.mode())) {
    throw ModeError("no attention in this mode (" + std::string(to_string(c.model.mode())) + ")");
  }
  const TrainConfig cfg = o.apply(c.config);
  require_file(p.sr, "sr");
  nlohmann::json j = read_json(p.sr);
  SemanticRepresentation sr;
  try {
    sr = sr_from_json(j.contains("sr") ? j.at("sr") : j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.sr + ": " + e.what());
  }
  validate(sr, ontology);
  const fs::path dir = output_dir(p.out);
  const GenerationResult r = greedy_decode(c.model, sr, cfg.max_length);
  const AttentionTrace& trace = r.hyps.front().trace;
  nlohmann::json doc = to_json(trace, ontology);
  doc["delex"] = r.hyps.front().delex;
  doc["text"] = r.hyps.front().text;
  write_file_atomic(dir / "trace.json", doc.dump(2) + "\n");
  write_file_atomic(dir / "domain.csv", trace_csv(trace, ontology, Layer::domain));
  write_file_atomic(dir / "act.csv", trace_csv(trace, ontology, Layer::act));
  write_file_atomic(dir / "slot.csv", trace_csv(trace, ontology, Layer::slot));
  out << r.hyps.front().text << "\n" << trace.size() << " placeholder steps\n";
  return kExitOk;
}

int cmd_gradcheck(const Paths& p, const Overrides& o, std::size_t index, double init_scale, std::ostream& out) {
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg = o.apply(cfg);
  cfg.validate();
  Loaded in;
  if (!p.ontology.empty() || !p.corpus.empty()) {
    in = load_inputs(p);
  } else {
    auto s = synth_corpus(default_synth_spec(10), cfg.seed);
    in.ontology = std::move(s.ontology);
    in.corpus = std::move(s.corpus);
  }
  const auto train = in.corpus.select(Split::train);
  if (index >= train.size()) throw ConfigError("example index beyond the training split");
  const Example& ex = *train[index];
  Model model(cfg.mode, in.ontology, build_vocabulary(train, in.ontology, cfg.mode), cfg.hidden, cfg.seed);
  if (init_scale > 0.0) {
    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> u(-init_scale, init_scale);
    for (auto& t : model.params().tensors()) {
      for (auto& v : t.data()) v = u(rng);
    }
  }
  const Supervision sup = supervise(ex, in.ontology, model.vocab(), cfg.mode);
  out << "example: " << ex.text << "\n";
  bool ok = true;
  for (bool attention : {false, true}) {
    if (attention && !uses_attention(cfg.mode)) continue;
    const auto report = grad_check(
        [&](Tape& tape, const ParamSet&) {
          const auto bound = model.bind(tape, true);
          return sentence_loss(tape, model, bound, ex.sr, sup, {}, attention).loss;
        },
        model.params());
    out << (attention ? "attention objective" : "likelihood objective") << ": max relative error "
        << report.max_rel_error() << (report.passed() ? " (pass)" : " (FAIL)") << ", worst entry "
        << report.max_entry_rel_error() << "\n";
    for (const auto& pc : report.params) {
      out << "  " << pc.name << " " << pc.rel_error << " (worst entry " << pc.worst_index << ": analytic "
          << pc.analytic_at_worst << ", numeric " << pc.numeric_at_worst << ")\n";
    }
    ok = ok && report.passed();
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-structured semantic encoder NLG toolkit"};
  app.name("treenlg");
  app.require_subcommand(1);
  Paths p;
  Overrides o;
  std::uint64_t synth_seed = 1;
  std::size_t distinct = 50, per_sr = 1, index = 0, eval_beam = 0;
  std::vector<std::string> domains;
  std::string target, source, split = "test", fractions, seeds, modes = "tree+att,flat";
  double fraction = 0.0, init_scale = 0.5;

  auto* synth = app.add_subcommand("synth", "write a synthetic ontology and corpus");
  synth->add_option("--spec", p.spec, "synthesis spec (JSON); default two-domain spec otherwise");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--distinct", distinct, "distinct SRs per domain for the default spec");
  synth->add_option("--examples-per-sr", per_sr, "examples per distinct SR for the default spec");
  synth->add_option("--out", p.out, "output directory")->required();

  auto* prepare = app.add_subcommand("prepare", "delexicalize a corpus and write a data report");
  prepare->add_option("--ontology", p.ontology)->required();
  prepare->add_option("--corpus", p.corpus)->required();
  prepare->add_option("--out", p.out, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train from scratch");
  train_cmd->add_option("--ontology", p.ontology)->required();
  train_cmd->add_option("--corpus", p.corpus)->required();
  train_cmd->add_option("--config", p.config, "JSON config; flags win");
  train_cmd->add_option("--domains", domains, "restrict training to single-domain examples of these domains");
  train_cmd->add_option("--out", p.out, "output directory")->required();
  o.attach(train_cmd);

  auto* adapt_cmd = app.add_subcommand("adapt", "fine-tune a checkpoint on a fraction of a target domain");
  adapt_cmd->add_option("--ontology", p.ontology)->required();
  adapt_cmd->add_option("--corpus", p.corpus)->required();
  adapt_cmd->add_option("--checkpoint", p.checkpoint)->required();
  adapt_cmd->add_option("--config", p.config);
  adapt_cmd->add_option("--target", target)->required();
  adapt_cmd->add_option("--fraction", fraction)->required();
  adapt_cmd->add_option("--out", p.out, "output directory")->required();
  o.attach(adapt_cmd);

  auto* generate = app.add_subcommand("generate", "beam-decode SRs");
  generate->add_option("--ontology", p.ontology)->required();
  generate->add_option("--checkpoint", p.checkpoint)->required();
  generate->add_option("--corpus", p.corpus, "decode the SRs of one corpus split");
  generate->add_option("--split", split, "split used with --corpus");
  generate->add_option("--input", p.input, "JSONL records with an \"sr\" field");
  generate->add_option("--out", p.out, "output JSONL file")->required();
  o.attach(generate);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "SER and BLEU of a checkpoint or of hypothesis files");
  evaluate_cmd->add_option("--ontology", p.ontology)->required();
  evaluate_cmd->add_option("--checkpoint", p.checkpoint);
  evaluate_cmd->add_option("--corpus", p.corpus);
  evaluate_cmd->add_option("--split", split);
  evaluate_cmd->add_option("--hyps", p.hyps, "JSONL hypotheses (corpus records or generate output)");
  evaluate_cmd->add_option("--refs", p.refs, "JSONL references (corpus records)");
  evaluate_cmd->add_option("--out", p.out, "metrics JSON file");
  o.attach(evaluate_cmd);

  auto* sweep = app.add_subcommand("sweep", "adaptation matrix over modes, fractions and seeds");
  sweep->add_option("--ontology", p.ontology)->required();
  sweep->add_option("--corpus", p.corpus)->required();
  sweep->add_option("--config", p.config);
  sweep->add_option("--source", source)->required();
  sweep->add_option("--target", target)->required();
  sweep->add_option("--fractions", fractions, "comma-separated, e.g. 0.0125,0.05,0.1")->required();
  sweep->add_option("--seeds", seeds, "comma-separated integers")->required();
  sweep->add_option("--modes", modes, "comma-separated modes");
  sweep->add_option("--eval-beam", eval_beam, "beam for test decoding (default: config beam)");
  sweep->add_option("--out", p.out, "results CSV")->required();
  o.attach(sweep);

  auto* trace = app.add_subcommand("trace", "export attention distributions for one SR");
  trace->add_option("--ontology", p.ontology)->required();
  trace->add_option("--checkpoint", p.checkpoint)->required();
  trace->add_option("--sr", p.sr, "JSON file holding an SR (or a record with an \"sr\" field)")->required();
  trace->add_option("--out", p.out, "output directory")->required();
  o.attach(trace);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of both objectives");
  gradcheck->add_option("--ontology", p.ontology);
  gradcheck->add_option("--corpus", p.corpus);
  gradcheck->add_option("--index", index, "training example to check");
  gradcheck
      ->add_option("--init-scale", init_scale, "redraw every parameter uniformly from [-s, s]; 0 keeps the init")
      ->capture_default_str();
  o.attach(gradcheck);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
    }
    if (*synth) return cmd_synth(p, synth_seed, distinct, per_sr, out);
    if (*prepare) return cmd_prepare(p, out);
    if (*train_cmd) return cmd_train(p, o, domains, out, err);
    if (*adapt_cmd) return cmd_adapt(p, o, target, fraction, out);
    if (*generate) return cmd_generate(p, o, split, out);
    if (*evaluate_cmd) return cmd_evaluate(p, o, split, out);
    if (*sweep) return cmd_sweep(p, o, source, target, fractions, seeds, modes, eval_beam, out, err);
    if (*trace) return cmd_trace(p, o, out);
    if (*gradcheck) return cmd_gradcheck(p, o, index, init_scale, out);
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompatibility;
  } catch (const ModeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitMode;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const LexicalizationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInput;
}

}  // namespace treenlg
