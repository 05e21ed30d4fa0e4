#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "treenlg/error.hpp"
#include "treenlg/metrics.hpp"

using namespace treenlg;

namespace doctest {
template <>
struct StringMaker<SerCounts> {
  static String convert(const SerCounts& c) {
    return ("{p=" + std::to_string(c.missing) + " q=" + std::to_string(c.redundant) + " N=" + std::to_string(c.required) +
            "}")
        .c_str();
  }
};
}  // namespace doctest
using fixtures::inform;

namespace {

using Sentence = std::vector<std::string>;

Sentence random_sentence(std::mt19937_64& rng, std::size_t vocab, std::size_t max_len) {
  Sentence s(rng() % (max_len + 1));
  for (auto& w : s) w = "w" + std::to_string(rng() % vocab);
  return s;
}

}  // namespace

TEST_CASE("ser examples") {
  const Ontology o = fixtures::small_ontology();
  const auto sr = fixtures::attraction_sr();  // three informable entries

  SUBCASE("exact tokens") {
    const auto c = ser(sr, o, "there are @attraction-inform-options @attraction-inform-type in the @attraction-inform-area");
    CHECK(c == SerCounts{0, 0, 3});
    CHECK(c.rate() == 0.0);
  }
  SUBCASE("one missing and one redundant out of four") {
    SemanticRepresentation four = sr;
    four.entries.push_back(inform("attraction", "inform", "area", "east"));
    const auto c = ser(four, o,
                       "@attraction-inform-options @attraction-inform-type @attraction-inform-area1 "
                       "@attraction-inform-area1 @hotel-inform-area");
    // area1 licensed once; second copy and the hotel token are redundant, area2 missing.
    CHECK(c.required == 4);
    CHECK(c.missing == 1);
    CHECK(c.redundant == 2);
    const auto d = ser(four, o, "@attraction-inform-options @attraction-inform-type @attraction-inform-area1 @hotel-inform-area");
    CHECK(d == SerCounts{1, 1, 4});
    CHECK(d.rate() == 0.5);
  }
  SUBCASE("wrong domain is missing and redundant") {
    SemanticRepresentation r{{inform("restaurant", "inform", "area", "north")}};
    const auto c = ser(r, o, "it is in the @hotel-inform-area");
    CHECK(c == SerCounts{1, 1, 1});
    CHECK(c.rate() == 2.0);
  }
  SUBCASE("requestable and binary entries are not counted") {
    SemanticRepresentation r{{fixtures::request("attraction", "request", "area"),
                              {"hotel", "inform", "internet", SlotValue::of("yes")}}};
    CHECK(ser(r, o, "which area ?").required == 0);
    CHECK(ser(r, o, "which area ?").rate() == 0.0);
    CHECK(ser(r, o, "@hotel-inform-area @hotel-inform-area").rate() == 2.0);
  }
  SUBCASE("accumulation") {
    SerCounts a{1, 0, 2};
    a += SerCounts{0, 3, 4};
    CHECK(a == SerCounts{1, 3, 6});
    CHECK(a.rate() == doctest::Approx(4.0 / 6.0));
  }
}

TEST_CASE("ser properties") {
  const Ontology o = fixtures::small_ontology();
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    const auto sr = fixtures::random_sr(o, rng);
    std::vector<std::string> perfect;
    for (const auto& t : licensed_tokens(sr, o)) perfect.push_back(t.token.surface());
    std::shuffle(perfect.begin(), perfect.end(), rng);
    const SerCounts base = ser(sr, o, perfect);
    CHECK(base.missing == 0);
    CHECK(base.redundant == 0);
    CHECK(base.required == perfect.size());
    CHECK(base.rate() == 0.0);
    if (!perfect.empty()) {
      auto dropped = perfect;
      dropped.erase(dropped.begin() + static_cast<long>(rng() % dropped.size()));
      const SerCounts c = ser(sr, o, dropped);
      CHECK(c.missing == 1);
      CHECK(c.redundant == 0);
      CHECK(c.rate() > 0.0);
    }
    auto extra = perfect;
    extra.insert(extra.begin() + static_cast<long>(rng() % (extra.size() + 1)), "@taxi-inform-car");
    const SerCounts c = ser(sr, o, extra);
    CHECK(c.redundant == 1);
    CHECK(c.missing == 0);
    CHECK(c.missing <= c.required);
  }
}

TEST_CASE("bleu examples") {
  const std::vector<Sentence> refs{{"the", "cat", "sat", "on", "the", "mat"}, {"it", "is", "in", "the", "west"}};
  SUBCASE("identical corpora") {
    const auto r = bleu(refs, refs);
    CHECK(r.score == 1.0);
    CHECK(r.brevity_penalty == 1.0);
    for (double p : r.precisions) CHECK(p == 1.0);
  }
  SUBCASE("no unigram overlap") {
    const std::vector<Sentence> hyps{{"a", "b", "c", "d", "e", "f"}, {"g", "h", "i", "j", "k"}};
    CHECK(bleu(hyps, refs).score <= 1e-2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(bleu({}, {}), ContractError);
    CHECK_THROWS_AS(bleu(refs, {refs[0]}), ContractError);
  }
  SUBCASE("empty hypotheses") {
    const std::vector<Sentence> hyps{{}, {}};
    CHECK(bleu(hyps, refs).score == 0.0);
  }
  SUBCASE("hand-computed short hypothesis") {
    // 4 tokens against 6: unigrams 4/4, bigrams 3/3, trigrams 2/2, 4-grams 1/1.
    const std::vector<Sentence> hyps{{"the", "cat", "sat", "on"}};
    const auto r = bleu(hyps, {refs[0]});
    CHECK(r.score == doctest::Approx(std::exp(1.0 - 6.0 / 4.0)).epsilon(1e-14));
  }
}

TEST_CASE("bleu agrees with an independent implementation") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Sentence> hyps, refs;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t k = 0; k < n; ++k) {
      hyps.push_back(random_sentence(rng, 6, 12));
      refs.push_back(random_sentence(rng, 6, 12));
    }
    CHECK(std::abs(bleu(hyps, refs).score - oracle::bleu(hyps, refs)) <= 1e-9);
  }
}

TEST_CASE("bleu is invariant to corpus order") {
  std::mt19937_64 rng(2);
  std::vector<Sentence> hyps, refs;
  for (int k = 0; k < 15; ++k) {
    hyps.push_back(random_sentence(rng, 5, 10));
    refs.push_back(random_sentence(rng, 5, 10));
  }
  const double before = bleu(hyps, refs).score;
  std::vector<std::size_t> perm(hyps.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Sentence> h2, r2;
  for (std::size_t i : perm) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  CHECK(bleu(h2, r2).score == before);
}

TEST_CASE("aggregate examples") {
  SUBCASE("single row") {
    const auto a = aggregate({{"flat", 0.5, 0.3, 0.6}});
    REQUIRE(a.size() == 1);
    CHECK(a[0].ser_mean == 0.3);
    CHECK(a[0].ser_sd == 0.0);
    CHECK(a[0].bleu_mean == 0.6);
    CHECK(a[0].count == 1);
  }
  SUBCASE("two rows") {
    const auto a = aggregate({{"flat", 0.5, 0.2, 0.0}, {"flat", 0.5, 0.4, 0.0}});
    REQUIRE(a.size() == 1);
    CHECK(a[0].ser_mean == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(a[0].ser_sd == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("order does not matter") {
    std::vector<MetricRow> rows;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const char* m : {"flat", "tree+att"}) {
      for (double f : {0.05, 0.5}) {
        for (int s = 0; s < 5; ++s) rows.push_back({m, f, u(rng), u(rng)});
      }
    }
    const auto a = aggregate(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto b = aggregate(rows);
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a[i].mode == b[i].mode);
      CHECK(a[i].fraction == b[i].fraction);
      CHECK(a[i].ser_mean == b[i].ser_mean);
      CHECK(a[i].ser_sd == b[i].ser_sd);
      CHECK(a[i].bleu_mean == b[i].bleu_mean);
      CHECK(a[i].bleu_sd == b[i].bleu_sd);
    }
    CHECK(a[0].mode == "flat");
    CHECK(a[0].fraction == 0.05);
  }
}

TEST_CASE("seen/unseen split") {
  const Ontology o = fixtures::small_ontology();
  auto make = [](SemanticRepresentation sr) {
    Example e;
    e.sr = std::move(sr);
    e.text = "x";
    return e;
  };
  std::vector<Example> train{make({{inform("hotel", "inform", "area", "east")}}),
                             make({{inform("restaurant", "inform", "food", "thai"), inform("restaurant", "inform", "area", "north")}})};
  std::vector<Example> test{make({{inform("restaurant", "inform", "area", "north"), inform("restaurant", "inform", "food", "thai")}}),
                            make({{inform("hotel", "inform", "area", "west")}}),
                            make({{fixtures::bare("restaurant", "reqmore")}})};
  auto ptrs = [](const std::vector<Example>& v) {
    std::vector<const Example*> out;
    for (const auto& e : v) out.push_back(&e);
    return out;
  };
  const auto split = seen_unseen_split(ptrs(test), ptrs(train), o);
  CHECK(split.seen.size() == 1);
  CHECK(split.unseen.size() == 2);
  CHECK(split.seen[0] == &test[0]);

  const auto loose = seen_unseen_split(ptrs(test), ptrs(train), o, false);
  CHECK(loose.seen.size() == 2);
  CHECK(loose.seen.size() + loose.unseen.size() == test.size());

  CHECK(seen_unseen_split(ptrs(train), ptrs(train), o).unseen.empty());
  CHECK(seen_unseen_split(ptrs(test), {}, o).seen.empty());
}

TEST_CASE("ser agrees with a brute-force multiset oracle") {
  const Ontology o = fixtures::small_ontology();
  std::mt19937_64 rng(41);
  const std::vector<std::string> words{"the", "is", "in", "@", "@hotel-inform-area", "@restaurant-suggest-name",
                                       "@hotel-select-type1", "@hotel-select-type2", "@attraction-inform-type"};
  for (int k = 0; k < 100; ++k) {
    auto sr = fixtures::random_sr(o, rng);
    if (k % 5 == 0) {
      sr.entries.push_back(inform("hotel", "select", "type", "a"));
      sr.entries.push_back(inform("hotel", "select", "type", "b"));
    }
    std::vector<std::string> hyp;
    for (const auto& t : licensed_tokens(sr, o)) {
      if (rng() % 4 != 0) hyp.push_back(t.token.surface());
    }
    for (std::size_t n = rng() % 6; n > 0; --n) hyp.push_back(words[rng() % words.size()]);
    std::shuffle(hyp.begin(), hyp.end(), rng);
    INFO(to_json(sr).dump(), " | ", join_tokens(hyp));
    CHECK(ser(sr, o, hyp) == oracle::ser(sr, o, hyp));
  }
}
