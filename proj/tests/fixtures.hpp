// Shared builders for the unit tests.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "treenlg/corpus.hpp"
#include "treenlg/ontology.hpp"
#include "treenlg/semantics.hpp"
#include "treenlg/synth.hpp"

namespace fixtures {

using namespace treenlg;

/// attraction / restaurant / hotel slice with every property kind.
inline Ontology small_ontology() {
  return Ontology::parse(R"({
    "attraction": {"inform": {"area": "informable", "options": "informable", "type": "informable"},
                   "request": {"pricerange": "requestable", "area": "requestable"}},
    "restaurant": {"inform": {"area": "informable", "food": "informable", "name": "informable"},
                   "suggest": {"name": "informable"},
                   "reqmore": {}},
    "hotel": {"inform": {"area": "informable", "internet": "binary", "options": "informable"},
              "select": {"type": "informable"}}
  })");
}

inline SemanticEntry inform(std::string d, std::string a, std::string s, std::string v) {
  return {std::move(d), std::move(a), std::move(s), SlotValue::of(std::move(v))};
}
inline SemanticEntry request(std::string d, std::string a, std::string s) {
  return {std::move(d), std::move(a), std::move(s), SlotValue::request()};
}
inline SemanticEntry bare(std::string d, std::string a) { return {std::move(d), std::move(a), "", SlotValue::none()}; }

/// The attraction example: three informed values and one request.
inline SemanticRepresentation attraction_sr() {
  return {{inform("attraction", "inform", "options", "five"), inform("attraction", "inform", "type", "colleges"),
           inform("attraction", "inform", "area", "west"), request("attraction", "request", "pricerange")}};
}

/// Random valid SR over `ontology` (single domain, 1..4 entries).
inline SemanticRepresentation random_sr(const Ontology& ontology, std::mt19937_64& rng) {
  const auto& domains = ontology.domains();
  const std::string d = domains[rng() % domains.size()];
  const auto acts = ontology.acts_of(d);
  SemanticRepresentation sr;
  const std::size_t n = 1 + rng() % 4;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string a = acts[rng() % acts.size()];
    const auto slots = ontology.slots_of(d, a);
    SemanticEntry e;
    if (slots.empty()) {
      e = bare(d, a);
    } else {
      const std::string s = slots[rng() % slots.size()];
      switch (*ontology.property(d, a, s)) {
        case SlotProperty::requestable: e = request(d, a, s); break;
        case SlotProperty::informable: e = inform(d, a, s, "v" + std::to_string(rng() % 1000)); break;
        case SlotProperty::binary: e = {d, a, s, SlotValue::of("yes")}; break;
      }
    }
    if (std::find(sr.entries.begin(), sr.entries.end(), e) == sr.entries.end()) sr.entries.push_back(e);
  }
  return sr;
}

/// Small synthetic two-domain corpus.
inline SynthResult small_synth(std::size_t distinct = 10, std::uint64_t seed = 3) {
  return synth_corpus(default_synth_spec(distinct), seed);
}

}  // namespace fixtures
