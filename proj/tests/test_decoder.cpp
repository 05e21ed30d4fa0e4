#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "treenlg/decoder.hpp"
#include "treenlg/error.hpp"
#include "treenlg/gradcheck.hpp"
#include "treenlg/model.hpp"
#include "treenlg/training.hpp"

using namespace treenlg;
using fixtures::inform;

namespace {

struct RawDecoder {
  Tensor embedding, input, recurrent, semantic, bias, output;
  std::size_t H, F;

  RawDecoder(std::size_t V, std::size_t H_, std::size_t F_)
      : embedding({V, H_}), input({7 * H_, H_ + F_}), recurrent({7 * H_, H_}), semantic({3 * H_, H_}), bias({7 * H_}),
        output({V, H_}), H(H_), F(F_) {}

  void randomize(std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (Tensor* t : {&embedding, &input, &recurrent, &semantic, &bias, &output}) {
      for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = u(rng);
    }
  }

  DecoderWeights bind(Tape& tape) const {
    return {tape.constant_ref(embedding), tape.constant_ref(input),    tape.constant_ref(recurrent),
            tape.constant_ref(semantic),  tape.constant_ref(bias),     tape.constant_ref(output),
            H,                            F};
  }
};

Var vec(Tape& tape, std::vector<double> v) { return tape.constant(Tensor::vector(std::move(v))); }

LayerKeys layer(Tape& tape, std::vector<std::size_t> labels, std::vector<std::vector<double>> rows,
                std::size_t universe) {
  LayerKeys k;
  k.labels = std::move(labels);
  k.universe = universe;
  std::vector<Var> vars;
  for (auto& r : rows) vars.push_back(vec(tape, r));
  k.keys = ops::stack_rows(vars);
  return k;
}

}  // namespace

TEST_CASE("decoder step examples") {
  SUBCASE("all-zero parameters halve the semantic state") {
    RawDecoder raw(4, 3, 0);
    Tape tape;
    const auto w = raw.bind(tape);
    const std::vector<double> v{0.8, -2.0, 0.1};
    DecoderState prev = initial_state(tape, vec(tape, v));
    const StepResult r = step(prev, ops::row(w.embedding, 1), w);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.state.s.value()[i] == doctest::Approx(0.5 * v[i]).epsilon(1e-15));
      CHECK(r.state.c.value()[i] == 0.0);
      CHECK(r.state.h.value()[i] == doctest::Approx(0.5 * std::tanh(0.5 * v[i])).epsilon(1e-15));
    }
    // Zero output weights: uniform word distribution.
    const Tensor p = ops::softmax(r.logits).value();
    for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25));
  }
  SUBCASE("h stays inside (-1, 1) for large weights") {
    RawDecoder raw(5, 4, 3);
    raw.randomize(3, 20.0);
    Tape tape;
    const auto w = raw.bind(tape);
    DecoderState st = initial_state(tape, vec(tape, {50.0, -50.0, 3.0, 0.0}));
    for (std::size_t t = 0; t < 10; ++t) {
      st = step(st, make_feedback_input(tape, t % 5, nullptr, w), w).state;
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(st.h.value()[i]) <= 1.0);
        CHECK(std::isfinite(st.h.value()[i]));
      }
    }
  }
  SUBCASE("dimension mismatch") {
    RawDecoder raw(4, 3, 0);
    Tape tape;
    const auto w = raw.bind(tape);
    DecoderState prev = initial_state(tape, vec(tape, {0.0, 0.0}));
    CHECK_THROWS_AS(step(prev, ops::row(w.embedding, 1), w), DimensionError);
    DecoderState ok = initial_state(tape, vec(tape, {0.0, 0.0, 0.0}));
    CHECK_THROWS_AS(step(ok, vec(tape, {1.0, 2.0}), w), DimensionError);
  }
}

TEST_CASE("attend examples") {
  Tape tape;
  SUBCASE("single node") {
    AttentionKeys k{layer(tape, {0}, {{3, 4}}, 1), layer(tape, {0}, {{3, 4}}, 1), layer(tape, {0}, {{3, 4}}, 1)};
    CHECK(ops::matmul(k.domain.keys, vec(tape, {1, 2})).value()[0] == 11.0);
    const auto d = attend(vec(tape, {1, 2}), k);
    CHECK(d.domain.value()[0] == 1.0);
  }
  SUBCASE("equal states give a uniform distribution") {
    AttentionKeys k{layer(tape, {0, 1}, {{0.3, -1}, {0.3, -1}}, 2), layer(tape, {0}, {{1, 1}}, 1),
                    layer(tape, {0}, {{1, 1}}, 1)};
    const auto d = attend(vec(tape, {2, 5}), k);
    CHECK(d.domain.value()[0] == doctest::Approx(0.5));
    CHECK(d.domain.value()[1] == doctest::Approx(0.5));
  }
  SUBCASE("three slots with states 1, 2, 3") {
    AttentionKeys k{layer(tape, {0}, {{1}}, 1), layer(tape, {0}, {{1}}, 1), layer(tape, {0, 2, 3}, {{1}, {2}, {3}}, 5)};
    const auto d = attend(vec(tape, {1}), k);
    const double z = std::exp(1) + std::exp(2) + std::exp(3);
    const Tensor& p = d.slot.value();
    REQUIRE(p.size() == 5);
    CHECK(p[0] == doctest::Approx(std::exp(1) / z).epsilon(1e-14));
    CHECK(p[1] == 0.0);
    CHECK(p[2] == doctest::Approx(std::exp(2) / z).epsilon(1e-14));
    CHECK(p[3] == doctest::Approx(std::exp(3) / z).epsilon(1e-14));
    CHECK(p[4] == 0.0);
  }
  SUBCASE("empty layers") {
    AttentionKeys k{layer(tape, {0}, {{1}}, 2), layer(tape, {1}, {{1}}, 2), LayerKeys{{}, {}, 3}};
    const auto d = attend(vec(tape, {1}), k);
    CHECK(d.slot.value().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.slot.value()[i] == 0.0);
    AttentionKeys no_act{layer(tape, {0}, {{1}}, 2), LayerKeys{{}, {}, 2}, LayerKeys{{}, {}, 3}};
    CHECK_THROWS_AS(attend(vec(tape, {1}), no_act), ContractError);
  }
}

TEST_CASE("attention on encoded trees gives probability vectors") {
  const Ontology o = fixtures::small_ontology();
  std::mt19937_64 rng(17);
  for (Mode mode : {Mode::tree_att}) {
    const Vocabulary vocab = Vocabulary::build({}, true);
    Model model(mode, o, vocab, 5, 4);
    for (int k = 0; k < 40; ++k) {
      const auto sr = fixtures::random_sr(o, rng);
      Tape tape;
      const auto bound = model.bind(tape, false);
      const auto enc = model.encode(tape, bound, sr);
      REQUIRE(enc.keys.has_value());
      const auto d = attend(vec(tape, {0.3, -0.2, 1.5, 0.0, 2.0}), *enc.keys);
      bool has_slot = false;
      for (const auto& e : sr.entries) has_slot = has_slot || e.value.kind != SlotValue::Kind::none;
      for (const Var* v : {&d.domain, &d.act, &d.slot}) {
        const Tensor& p = v->value();
        double total = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          CHECK(p[i] >= 0.0);
          total += p[i];
        }
        if (v != &d.slot || has_slot) CHECK(std::abs(total - 1.0) <= 1e-12);
      }
      CHECK(d.domain.value().size() == o.domains().size());
      CHECK(d.act.value().size() == o.acts().size());
      CHECK(d.slot.value().size() == o.slots().size());
      // Labels outside the SR get nothing.
      for (std::size_t i = 0; i < o.domains().size(); ++i) {
        if (o.domains()[i] != sr.entries[0].domain) CHECK(d.domain.value()[i] == 0.0);
      }
    }
  }
}

TEST_CASE("keys sum hidden states of repeated labels") {
  const Ontology o = fixtures::small_ontology();
  const Vocabulary vocab = Vocabulary::build({}, true);
  Model model(Mode::tree_att, o, vocab, 3, 1);
  // "area" appears under inform and request.
  SemanticRepresentation sr{{inform("attraction", "inform", "area", "west"),
                             fixtures::request("attraction", "request", "area")}};
  Tape tape;
  const auto bound = model.bind(tape, false);
  const SemTree tree = build_tree(sr, o, model.tokens());
  const EncodedTree enc = encode(tape, tree, *bound.tree);
  const AttentionKeys keys = attention_keys(tree, enc, o);
  REQUIRE(keys.slot.labels.size() == 1);
  double expected[3] = {0, 0, 0};
  for (std::size_t n : tree.nodes_in(Layer::slot)) {
    for (std::size_t i = 0; i < 3; ++i) expected[i] += enc.states[n].h.value()[i];
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(keys.slot.keys.value().at(0, i) == doctest::Approx(expected[i]));
  CHECK(keys.act.labels.size() == 2);
}

TEST_CASE("assemble_token examples") {
  const Ontology o = fixtures::small_ontology();
  auto one_hot = [](std::size_t n, std::size_t k) {
    std::vector<double> v(n, 0.0);
    v[k] = 1.0;
    return v;
  };
  const auto d = one_hot(3, *o.domain_index("attraction"));
  const auto a = one_hot(5, *o.act_index("inform"));
  const auto s = one_hot(o.slots().size(), *o.slot_index("area"));
  const AttentionStep st = assemble_token(d, a, s, o, 4);
  CHECK(DelexToken{st.chosen, 0}.surface() == "@attraction-inform-area");
  CHECK(st.step == 4);
  CHECK(st.slot == s);

  SUBCASE("ties go to the canonically first label") {
    const std::vector<double> tie{0.0, 0.5, 0.5};
    const auto t = assemble_token(tie, a, s, o, 0);
    CHECK(t.chosen.domain == o.domains()[1]);
  }
  SUBCASE("the trace keeps full distributions") {
    const std::vector<double> soft{0.2, 0.7, 0.1};
    const auto t = assemble_token(soft, a, s, o, 0);
    CHECK(t.domain == soft);
  }
  SUBCASE("wrong sizes") { CHECK_THROWS_AS(assemble_token(a, a, s, o, 0), DimensionError); }
}

TEST_CASE("argmax labels do not change when the query is scaled") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Ontology o = fixtures::small_ontology();
  for (int trial = 0; trial < 100; ++trial) {
    Tape tape;
    std::vector<std::vector<double>> rows(3, std::vector<double>(4));
    for (auto& r : rows) {
      for (auto& x : r) x = u(rng);
    }
    AttentionKeys k{layer(tape, {0, 1, 2}, rows, 3), layer(tape, {0, 1, 2}, rows, 5),
                    layer(tape, {0, 1, 2}, rows, o.slots().size())};
    std::vector<double> q(4);
    for (auto& x : q) x = u(rng);
    const double c = std::exp(u(rng) * 2.0);
    std::vector<double> qs = q;
    for (auto& x : qs) x *= c;
    const auto d1 = attend(vec(tape, q), k);
    const auto d2 = attend(vec(tape, qs), k);
    const auto t1 = assemble_token(d1.domain.value().data(), d1.act.value().data(), d1.slot.value().data(), o, 0);
    const auto t2 = assemble_token(d2.domain.value().data(), d2.act.value().data(), d2.slot.value().data(), o, 0);
    CHECK(t1.chosen == t2.chosen);
  }
}

TEST_CASE("occurrence numbering follows emission order") {
  std::map<Triple, int> emitted;
  const Triple t{"hotel", "select", "type"};
  CHECK(number_occurrence(t, 2, emitted).surface() == "@hotel-select-type1");
  CHECK(number_occurrence(t, 2, emitted).surface() == "@hotel-select-type2");
  const Triple a{"hotel", "inform", "area"};
  CHECK(number_occurrence(a, 1, emitted).surface() == "@hotel-inform-area");
  CHECK(number_occurrence(a, 1, emitted).surface() == "@hotel-inform-area");
}

TEST_CASE("feedback input examples") {
  const Ontology o = fixtures::small_ontology();
  const std::size_t F = o.domains().size() + o.acts().size() + o.slots().size();
  RawDecoder raw(6, 2, F);
  raw.randomize(1);
  Tape tape;
  const auto w = raw.bind(tape);

  const Tensor plain = make_feedback_input(tape, 3, nullptr, w).value();
  REQUIRE(plain.size() == 2 + F);
  CHECK(plain[0] == raw.embedding.at(3, 0));
  CHECK(plain[1] == raw.embedding.at(3, 1));
  for (std::size_t i = 2; i < plain.size(); ++i) CHECK(plain[i] == 0.0);

  AttentionDists d{vec(tape, {0.1, 0.2, 0.7}), vec(tape, {1, 0, 0, 0, 0}), vec(tape, std::vector<double>(o.slots().size(), 0.5))};
  const Tensor fed = make_feedback_input(tape, 3, &d, w).value();
  REQUIRE(fed.size() == 2 + F);
  CHECK(fed[2] == 0.1);
  CHECK(fed[4] == 0.7);
  CHECK(fed[5] == 1.0);
  CHECK(fed[2 + F - 1] == 0.5);

  AttentionDists short_d{vec(tape, {1.0}), vec(tape, {1.0}), vec(tape, {1.0})};
  CHECK_THROWS_AS(make_feedback_input(tape, 3, &short_d, w), DimensionError);

  const Vocabulary vocab = Vocabulary::build({}, true);
  CHECK(Model(Mode::tree_att, o, vocab, 4, 1).feedback_size() == F);
  const Vocabulary plain_vocab = Vocabulary::build({}, false);
  CHECK(Model(Mode::tree, o, plain_vocab, 4, 1).feedback_size() == 0);
}

TEST_CASE("vocabulary placeholder invariant") {
  const auto s = fixtures::small_synth();
  const auto train = s.corpus.select(Split::train);
  const Vocabulary att = build_vocabulary(train, s.ontology, Mode::tree_att);
  const Vocabulary flat = build_vocabulary(train, s.ontology, Mode::flat);
  std::size_t att_at = 0, flat_composite = 0;
  for (const auto& w : att.words()) {
    if (!w.empty() && w[0] == '@') {
      CHECK(w == "@");
      ++att_at;
    }
  }
  for (const auto& w : flat.words()) {
    if (w.size() > 1 && w[0] == '@') ++flat_composite;
  }
  CHECK(att_at == 1);
  CHECK(att.has_placeholder());
  CHECK_FALSE(flat.has_placeholder());
  CHECK(flat_composite > 0);
  CHECK_FALSE(flat.find("@").has_value());
}

TEST_CASE("trace serialization") {
  const Ontology o = fixtures::small_ontology();
  AttentionTrace trace;
  std::vector<double> d{0.0, 1.0, 0.0}, a{0.25, 0.75, 0.0, 0.0, 0.0}, s(o.slots().size(), 0.0);
  s[0] = 1.0;
  trace.push_back(assemble_token(d, a, s, o, 2));
  const auto j = to_json(trace, o);
  CHECK(j["steps"].size() == 1);
  CHECK(j["steps"][0]["step"] == 2);
  CHECK(j["steps"][0]["act"][1] == 0.75);
  CHECK(j["labels"]["domain"][1] == o.domains()[1]);
  const std::string csv = trace_csv(trace, o, Layer::act);
  CHECK(csv == "step,inform,reqmore,request,select,suggest\n2,0.25,0.75,0,0,0\n");
  CHECK_THROWS_AS(trace_csv(trace, o, Layer::property), ContractError);
}

TEST_CASE("full decoder passes a finite-difference check") {
  const auto s = fixtures::small_synth();
  const auto train = s.corpus.select(Split::train);
  for (Mode mode : {Mode::tree_att, Mode::flat}) {
    Model model(mode, s.ontology, build_vocabulary(train, s.ontology, mode), 4, 2);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& t : model.params().tensors()) {
      for (auto& v : t.data()) v = u(rng);
    }
    const Example& ex = *train[0];
    const Supervision sup = supervise(ex, s.ontology, model.vocab(), mode);
    const auto report = grad_check(
        [&](Tape& tape, const ParamSet&) {
          const auto bound = model.bind(tape, true);
          return sentence_loss(tape, model, bound, ex.sr, sup, {}, uses_attention(mode)).loss;
        },
        model.params());
    INFO(to_string(mode), " worst ", report.max_rel_error());
    CHECK(report.passed());
    CHECK(report.max_rel_error() <= 1e-4);
  }
}
