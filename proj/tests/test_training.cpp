#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "treenlg/checkpoint.hpp"
#include "treenlg/error.hpp"
#include "treenlg/gradcheck.hpp"
#include "treenlg/generation.hpp"
#include "treenlg/training.hpp"

using namespace treenlg;
using fixtures::inform;

namespace {

Var log_uniform(Tape& tape, std::size_t n) {
  return tape.constant(Tensor::vector(std::vector<double>(n, -std::log(static_cast<double>(n)))));
}

Var log_dist(Tape& tape, std::vector<double> p) {
  for (auto& x : p) x = std::log(x);
  return tape.constant(Tensor::vector(std::move(p)));
}

Var dist(Tape& tape, std::vector<double> p) { return tape.constant(Tensor::vector(std::move(p))); }

TrainConfig tiny_config() {
  TrainConfig c;
  c.hidden = 8;
  c.max_epochs = 3;
  c.batch_size = 4;
  c.max_length = 30;
  return c;
}

std::vector<const Example*> all_of(const Corpus& c) {
  std::vector<const Example*> out;
  for (const auto& e : c.examples) out.push_back(&e);
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("treenlg-test-" + std::to_string(std::random_device{}()) + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("nll_loss examples") {
  Tape tape;
  SUBCASE("uniform over ten words, four tokens") {
    std::vector<Var> lp(4, log_uniform(tape, 10));
    const std::vector<std::size_t> y{0, 3, 9, 2};
    CHECK(nll_loss(lp, y).value()[0] == doctest::Approx(4.0 * std::log(10.0)).epsilon(1e-14));
  }
  SUBCASE("single token with probability 0.25") {
    std::vector<Var> lp{log_dist(tape, {0.25, 0.75})};
    const std::vector<std::size_t> y{0};
    CHECK(nll_loss(lp, y).value()[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
  SUBCASE("near one-hot predictions") {
    std::vector<Var> lp{log_dist(tape, {1e-12, 1.0 - 1e-12}), log_dist(tape, {1.0 - 1e-12, 1e-12})};
    const std::vector<std::size_t> y{1, 0};
    CHECK(nll_loss(lp, y).value()[0] < 1e-10);
  }
  SUBCASE("errors") {
    std::vector<Var> lp{log_uniform(tape, 3)};
    const std::vector<std::size_t> bad{3};
    CHECK_THROWS_AS(nll_loss(lp, bad), ContractError);
    const std::vector<std::size_t> two{0, 1};
    CHECK_THROWS_AS(nll_loss(lp, two), ContractError);
  }
}

TEST_CASE("att_loss examples") {
  Tape tape;
  Var j = tape.constant(Tensor::scalar(2.5));
  SUBCASE("no placeholder steps") { CHECK(att_loss(j, {}).value()[0] == 2.5); }
  SUBCASE("certain labels") {
    std::vector<LabeledAttention> steps{
        {{dist(tape, {0, 1}), dist(tape, {1, 0, 0}), dist(tape, {0, 0, 1})}, {1, 0, 2}}};
    CHECK(att_loss(j, steps).value()[0] == 2.5);
  }
  SUBCASE("uniform over two labels on each layer") {
    std::vector<LabeledAttention> steps{
        {{dist(tape, {0.5, 0.5}), dist(tape, {0.5, 0, 0.5}), dist(tape, {0, 0.5, 0.5})}, {0, 2, 1}}};
    CHECK(att_loss(j, steps).value()[0] == doctest::Approx(2.5 + 3.0 * std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("label outside the support") {
    std::vector<LabeledAttention> steps{{{dist(tape, {0, 1}), dist(tape, {1, 0}), dist(tape, {1, 0})}, {0, 0, 0}}};
    CHECK_THROWS_AS(att_loss(j, steps), ContractError);
  }
}

TEST_CASE("the attention objective never undercuts the likelihood") {
  const auto s = fixtures::small_synth();
  const auto train = s.corpus.select(Split::train);
  const Model model(Mode::tree_att, s.ontology, build_vocabulary(train, s.ontology, Mode::tree_att), 6, 4);
  for (const Example* e : train) {
    const Supervision sup = supervise(*e, s.ontology, model.vocab(), Mode::tree_att);
    Tape tape;
    const auto bound = model.bind(tape, false);
    const SentenceLoss l = sentence_loss(tape, model, bound, e->sr, sup, {}, true);
    CHECK(l.loss.value()[0] >= l.nll.value()[0]);
    // Equality only when every layer offers a single label.
    const auto keys = *model.encode(tape, bound, e->sr).keys;
    const bool ambiguous = keys.domain.labels.size() > 1 || keys.act.labels.size() > 1 || keys.slot.labels.size() > 1;
    if (sup.placeholders > 0 && ambiguous) CHECK(l.loss.value()[0] > l.nll.value()[0]);
    if (!ambiguous) CHECK(l.loss.value()[0] == doctest::Approx(l.nll.value()[0]).epsilon(1e-12));
  }
}

TEST_CASE("supervision labels line up with placeholders") {
  const auto s = fixtures::small_synth();
  const auto train = s.corpus.select(Split::train);
  const Vocabulary vocab = build_vocabulary(train, s.ontology, Mode::tree_att);
  for (const Example* e : train) {
    const Supervision sup = supervise(*e, s.ontology, vocab, Mode::tree_att);
    REQUIRE(sup.labels.size() == sup.targets.size());
    CHECK(sup.targets.back() == vocab.eos());
    std::size_t n = 0;
    for (std::size_t t = 0; t < sup.targets.size(); ++t) {
      const bool is_placeholder = sup.targets[t] == vocab.placeholder();
      n += is_placeholder;
      CHECK(sup.labels[t].has_value() == is_placeholder);
    }
    CHECK(n == sup.placeholders);
    CHECK_FALSE(sup.label_noise);
  }

  SUBCASE("a slot token the SR does not license is noise") {
    Example noisy;
    noisy.sr = {{inform("restaurant", "inform", "area", "north")}};
    noisy.text = "it is in the north near @hotel-inform-area .";
    const Supervision sup = supervise(noisy, s.ontology, vocab, Mode::tree_att);
    CHECK(sup.label_noise);
    CHECK(sup.placeholders == 2);
    // The noisy step is skipped; the loss is still defined.
    const Model model(Mode::tree_att, s.ontology, vocab, 4, 1);
    Tape tape;
    const auto bound = model.bind(tape, false);
    CHECK(std::isfinite(sentence_loss(tape, model, bound, noisy.sr, sup, {}, true).loss.value()[0]));

    Corpus c;
    c.examples.push_back(noisy);
    CHECK(data_quality(c, s.ontology).noisy_sentences == 1);
  }
}

TEST_CASE("gradients of both objectives match finite differences") {
  const auto s = fixtures::small_synth();
  const auto train = s.corpus.select(Split::train);
  Model model(Mode::tree_att, s.ontology, build_vocabulary(train, s.ontology, Mode::tree_att), 5, 7);
  // A generic point: at the small initial scale some gradients sit below
  // the finite-difference resolution.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& t : model.params().tensors()) {
    for (auto& v : t.data()) v = u(rng);
  }
  const Example* chosen = nullptr;
  for (const Example* e : train) {
    if (supervise(*e, s.ontology, model.vocab(), Mode::tree_att).placeholders > 1) {
      chosen = e;
      break;
    }
  }
  REQUIRE(chosen != nullptr);
  const Example& ex = *chosen;
  const Supervision sup = supervise(ex, s.ontology, model.vocab(), Mode::tree_att);
  for (bool attention : {false, true}) {
    const auto report = grad_check(
        [&](Tape& tape, const ParamSet&) {
          const auto bound = model.bind(tape, true);
          return sentence_loss(tape, model, bound, ex.sr, sup, {}, attention).loss;
        },
        model.params());
    INFO("attention objective: ", attention, ", worst ", report.max_rel_error());
    CHECK(report.passed());
  }
}

TEST_CASE("config defaults") {
  const TrainConfig c;
  CHECK(c.hidden == 100);
  CHECK(c.layers == 1);
  CHECK(c.dropout == 0.25);
  CHECK(c.learning_rate == 0.0025);
  CHECK(c.adapt_learning_rate == 0.001);
  CHECK(c.batch_size == 16);
  CHECK(c.patience == 20);
  CHECK(c.mode == Mode::tree_att);
  CHECK(c.beam == 10);
  CHECK(c.max_length == 80);
  CHECK(c.clip_norm == 5.0);
  CHECK_NOTHROW(c.validate());

  TrainConfig bad = c;
  bad.layers = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(config_from_json(to_json(c)) == c);
  const TrainConfig over = config_from_json({{"hidden", 32}, {"mode", "flat"}});
  CHECK(over.hidden == 32);
  CHECK(over.mode == Mode::flat);
  CHECK(over.dropout == 0.25);
  CHECK_THROWS_AS(config_from_json({{"hiden", 32}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"hidden", "big"}}), ConfigError);
}

TEST_CASE("training is deterministic and lowers the loss") {
  const auto s = fixtures::small_synth();
  const TrainConfig cfg = tiny_config();
  const auto train_split = s.corpus.select(Split::train);

  double before = 0.0, after_one = 0.0;
  {
    const Model fresh(cfg.mode, s.ontology, build_vocabulary(train_split, s.ontology, cfg.mode), cfg.hidden, cfg.seed);
    before = mean_loss(fresh, train_split);
  }
  const TrainResult a = train(s.corpus, cfg, s.ontology, [&](const EpochLog& log, const Model& m) {
    if (log.epoch == 1) after_one = mean_loss(m, train_split);
    return true;
  });
  const TrainResult b = train(s.corpus, cfg, s.ontology);
  CHECK(after_one < before);
  REQUIRE(a.log.size() == cfg.max_epochs);
  CHECK(a.log == b.log);
  CHECK(a.best.model.params() == b.best.model.params());
  CHECK(a.best.epoch >= 1);
  CHECK(a.best.epoch <= cfg.max_epochs);

  SUBCASE("a different seed changes the run") {
    TrainConfig other = cfg;
    other.seed = 2;
    CHECK_FALSE(train(s.corpus, other, s.ontology).log == a.log);
  }
  SUBCASE("the callback can stop training") {
    const TrainResult c = train(s.corpus, cfg, s.ontology, [](const EpochLog&, const Model&) { return false; });
    CHECK(c.log.size() == 1);
  }
  SUBCASE("empty splits") {
    Corpus no_dev;
    for (const auto& e : s.corpus.examples) {
      if (e.split != Split::dev) no_dev.examples.push_back(e);
    }
    CHECK_THROWS_AS(train(no_dev, cfg, s.ontology), ConfigError);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto s = fixtures::small_synth();
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 2;
  const TrainResult r = train(s.corpus, cfg, s.ontology);
  TempDir dir;
  const auto path = dir.path / "model.json";
  save_checkpoint(path, r.best);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.model.params() == r.best.model.params());
  CHECK(back.model.vocab() == r.best.model.vocab());
  CHECK(back.config == r.best.config);
  CHECK(back.epoch == r.best.epoch);
  CHECK(back.dev_ser == r.best.dev_ser);
  for (const auto& e : s.corpus.examples) {
    const auto g1 = greedy_decode(r.best.model, e.sr, 30);
    const auto g2 = greedy_decode(back.model, e.sr, 30);
    CHECK(g1.hyps[0].tokens == g2.hyps[0].tokens);
    CHECK(g1.hyps[0].score == g2.hyps[0].score);
  }
  CHECK_NOTHROW(require_compatible(back, s.ontology));
  CHECK_THROWS_AS(require_compatible(back, fixtures::small_ontology()), CompatibilityError);

  SUBCASE("corrupted files") {
    auto j = to_json(r.best);
    j["version"] = 99;
    CHECK_THROWS_AS(checkpoint_from_json(j), CompatibilityError);
    j = to_json(r.best);
    j["fingerprint"] = "0000000000000000";
    CHECK_THROWS_AS(checkpoint_from_json(j), CompatibilityError);
    j = to_json(r.best);
    j["tensors"].erase("dec.output");
    CHECK_THROWS_AS(checkpoint_from_json(j), ParseError);
    CHECK_THROWS_AS(checkpoint_from_json(nlohmann::json{{"format", "other"}}), ParseError);
    CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.json"), ParseError);
  }
}

TEST_CASE("adaptation sampling") {
  std::vector<Example> pool(800);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].record = i + 1;
    pool[i].text = "x";
  }
  const auto ptrs = all_of(Corpus{pool});
  CHECK(sample_adaptation(ptrs, 0.0125, 1).size() == 10);
  CHECK(sample_adaptation(ptrs, 0.05, 1).size() == 40);
  CHECK(sample_adaptation(ptrs, 0.001, 1).size() == 1);
  CHECK(sample_adaptation(ptrs, 1.0, 1).size() == 800);
  CHECK(sample_adaptation(ptrs, 0.1, 4) == sample_adaptation(ptrs, 0.1, 4));
  CHECK(sample_adaptation(ptrs, 0.1, 4) != sample_adaptation(ptrs, 0.1, 5));
  const auto sub = sample_adaptation(ptrs, 0.3, 9);
  CHECK(std::set<const Example*>(sub.begin(), sub.end()).size() == sub.size());
  CHECK_THROWS_AS(sample_adaptation(ptrs, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(sample_adaptation(ptrs, 1.5, 1), ConfigError);
  CHECK_THROWS_AS(sample_adaptation({}, 0.5, 1), ConfigError);
}

TEST_CASE("adapt fine-tunes on the target domain only") {
  const auto s = fixtures::small_synth(20);
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 2;
  const TrainResult src = train(s.corpus, cfg, s.ontology);
  const TrainResult a = adapt(src.best, s.corpus, "hotel", 0.5, cfg, 3);
  const TrainResult b = adapt(src.best, s.corpus, "hotel", 0.5, cfg, 3);
  CHECK(a.log == b.log);
  CHECK(a.best.model.params() == b.best.model.params());
  CHECK_FALSE(a.best.model.params() == src.best.model.params());
  CHECK_THROWS_AS(adapt(src.best, s.corpus, "taxi", 0.5, cfg, 3), ConfigError);
}

TEST_CASE("run_matrix counts and CSV round trip") {
  const auto s = fixtures::small_synth(20);
  MatrixSpec spec;
  spec.source = "restaurant";
  spec.target = "hotel";
  spec.fractions = {0.25, 0.5, 1.0};
  spec.seeds = {1, 2, 3, 4, 5};
  spec.modes = {Mode::tree_att, Mode::flat};
  spec.config = tiny_config();
  spec.config.hidden = 4;
  spec.config.max_epochs = 1;
  spec.eval_beam = 2;
  const MatrixResult r = run_matrix(s.corpus, s.ontology, spec);
  CHECK(r.rows.size() == 30);
  REQUIRE(r.aggregates.size() == 6);
  for (const auto& agg : r.aggregates) {
    CHECK(agg.seed == "mean");
    double ser = 0.0, bleu = 0.0;
    std::size_t n = 0;
    for (const auto& row : r.rows) {
      if (row.mode == agg.mode && row.fraction == agg.fraction) {
        ser += row.ser;
        bleu += row.bleu;
        ++n;
      }
    }
    CHECK(n == 5);
    CHECK(agg.ser == doctest::Approx(ser / 5).epsilon(1e-12));
    CHECK(agg.bleu == doctest::Approx(bleu / 5).epsilon(1e-12));
  }
  std::ostringstream out;
  write_results_csv(out, r);
  std::istringstream in(out.str());
  CHECK(read_results_csv(in) == r);
  CHECK(out.str().rfind("mode,source,target,fraction,seed,ser,bleu", 0) == 0);
}
