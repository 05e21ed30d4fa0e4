// SPDX-License-Identifier: Apache-2.0
#include "treenlg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "treenlg/autodiff.hpp"
#include "treenlg/error.hpp"

namespace treenlg {
namespace {

std::size_t pick_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick_index(rng, i)]);
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::vector<std::string> placeholders(const std::string& tmpl) {
  std::vector<std::string> out;
  for (std::size_t pos = tmpl.find('{'); pos != std::string::npos; pos = tmpl.find('{', pos + 1)) {
    const auto end = tmpl.find('}', pos);
    if (end == std::string::npos) throw ConfigError("synth: unbalanced '{' in template \"" + tmpl + "\"");
    out.push_back(tmpl.substr(pos + 1, end - pos - 1));
  }
  return out;
}

struct PlannedEntry {
  std::string act;
  std::string slot;  // empty for slotless acts
  SlotProperty property = SlotProperty::informable;
  std::size_t variant = 0;
  std::string fixed_value;  // binary slots keep one value per SR
};

class Planner {
 public:
  Planner(const SynthSpec& spec, const SynthDomain& domain) : spec_(spec), domain_(domain) {}

  const std::vector<std::string>& templates_for(const std::string& act, const std::string& slot) const {
    const std::string local = slot.empty() ? act : act + "." + slot;
    if (auto it = spec_.templates.find(domain_.name + "." + local); it != spec_.templates.end()) return it->second;
    if (auto it = spec_.templates.find(local); it != spec_.templates.end()) return it->second;
    throw ConfigError("synth: no template for " + domain_.name + "." + local);
  }

  const std::vector<std::string>& pool_for(const std::string& slot) const {
    if (auto it = domain_.values.find(slot); it != domain_.values.end()) return it->second;
    if (auto it = spec_.values.find(slot); it != spec_.values.end()) return it->second;
    throw ConfigError("synth: no values for slot " + domain_.name + "." + slot);
  }

  std::size_t repeat_of(const std::string& act, const std::string& slot) const {
    if (auto it = spec_.repeats.find(act + "." + slot); it != spec_.repeats.end()) return it->second;
    return 1;
  }

  std::vector<PlannedEntry> draw(Rng& rng) const {
    std::vector<std::string> acts;
    for (const auto& [a, _] : domain_.acts) acts.push_back(a);
    shuffle_in_place(acts, rng);
    const std::size_t k = 1 + pick_index(rng, std::min(domain_.max_acts, acts.size()));
    acts.resize(k);
    std::vector<PlannedEntry> plan;
    for (const auto& act : acts) {
      const auto& slot_map = domain_.acts.at(act);
      if (slot_map.empty()) {
        plan.push_back({act, "", SlotProperty::informable, pick_index(rng, templates_for(act, "").size()), ""});
        continue;
      }
      std::vector<std::string> slots;
      for (const auto& [s, _] : slot_map) slots.push_back(s);
      shuffle_in_place(slots, rng);
      slots.resize(1 + pick_index(rng, std::min(domain_.max_slots, slots.size())));
      for (const auto& slot : slots) {
        const SlotProperty prop = slot_map.at(slot);
        std::string fixed;
        if (prop == SlotProperty::binary) {
          const auto& pool = pool_for(slot);
          fixed = pool[pick_index(rng, pool.size())];
        }
        const std::size_t variant = pick_index(rng, templates_for(act, slot).size());
        for (std::size_t r = 0; r < repeat_of(act, slot); ++r) plan.push_back({act, slot, prop, variant, fixed});
      }
    }
    return plan;
  }

  Example realize(const std::vector<PlannedEntry>& plan, Rng& rng) const {
    Example ex;
    std::set<std::string> used;
    std::string text;
    for (std::size_t i = 0; i < plan.size();) {
      const std::string& act = plan[i].act;
      std::vector<std::string> phrases;
      for (; i < plan.size() && plan[i].act == act; ++i) {
        const auto& p = plan[i];
        SemanticEntry e{domain_.name, act, p.slot, SlotValue::none()};
        std::string value;
        if (!p.slot.empty()) {
          switch (p.property) {
            case SlotProperty::requestable: e.value = SlotValue::request(); break;
            case SlotProperty::binary:
              value = p.fixed_value;
              e.value = SlotValue::of(value);
              break;
            case SlotProperty::informable: {
              std::vector<std::string> free;
              for (const auto& v : pool_for(p.slot)) {
                if (!used.contains(v)) free.push_back(v);
              }
              if (free.empty()) throw ConfigError("synth: value pool exhausted for " + domain_.name + "." + p.slot);
              value = free[pick_index(rng, free.size())];
              used.insert(value);
              e.value = SlotValue::of(value);
              break;
            }
          }
        }
        std::string phrase = templates_for(act, p.slot).at(p.variant);
        phrase = replace_all(std::move(phrase), "{value}", value);
        phrase = replace_all(std::move(phrase), "{domain}", domain_.noun);
        phrases.push_back(std::move(phrase));
        ex.sr.entries.push_back(std::move(e));
      }
      const auto jt = spec_.joiners.find(act);
      const std::string joiner = jt == spec_.joiners.end() ? " and " : jt->second;
      std::string clause;
      if (auto pt = spec_.prefixes.find(act); pt != spec_.prefixes.end()) clause = pt->second + " ";
      for (std::size_t k = 0; k < phrases.size(); ++k) clause += (k ? joiner : "") + phrases[k];
      if (!text.empty()) text += " ";
      const bool question = act == "request" || act == "select" || act == "reqmore";
      text += clause + (question ? " ?" : " .");
    }
    ex.text = text;
    return ex;
  }

 private:
  const SynthSpec& spec_;
  const SynthDomain& domain_;
};

void check_spec(const SynthSpec& spec) {
  if (spec.domains.empty()) throw ConfigError("synth: spec declares no domains");
  std::set<std::string> domain_names;
  for (const auto& d : spec.domains) {
    if (!valid_name(d.name)) throw ConfigError("synth: invalid domain name '" + d.name + "'");
    if (!domain_names.insert(d.name).second) throw ConfigError("synth: duplicate domain " + d.name);
    if (d.acts.empty()) throw ConfigError("synth: domain " + d.name + " declares no acts");
    if (d.max_acts == 0 || d.max_slots == 0) throw ConfigError("synth: max_acts and max_slots must be positive");
  }
  auto declared_slot = [&](const std::string* domain, const std::string& act, const std::string& slot) {
    for (const auto& d : spec.domains) {
      if (domain && d.name != *domain) continue;
      auto it = d.acts.find(act);
      if (it != d.acts.end() && it->second.contains(slot)) return true;
    }
    return false;
  };
  auto slotless_act = [&](const std::string* domain, const std::string& act) {
    for (const auto& d : spec.domains) {
      if (domain && d.name != *domain) continue;
      auto it = d.acts.find(act);
      if (it != d.acts.end() && it->second.empty()) return true;
    }
    return false;
  };
  for (const auto& [key, variants] : spec.templates) {
    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
      const auto dot = key.find('.', start);
      parts.push_back(key.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    bool ok = false;
    if (parts.size() == 1) ok = slotless_act(nullptr, parts[0]);
    if (parts.size() == 2) {
      ok = declared_slot(nullptr, parts[0], parts[1]) ||
           (domain_names.contains(parts[0]) && slotless_act(&parts[0], parts[1]));
    }
    if (parts.size() == 3) ok = declared_slot(&parts[0], parts[1], parts[2]);
    if (!ok) throw ConfigError("synth: template '" + key + "' references an undeclared slot");
    if (variants.empty()) throw ConfigError("synth: template '" + key + "' has no variants");
    for (const auto& v : variants) {
      for (const auto& ph : placeholders(v)) {
        if (ph != "value" && ph != "domain") {
          throw ConfigError("synth: template '" + key + "' uses unknown placeholder {" + ph + "}");
        }
      }
    }
  }
  for (const auto& d : spec.domains) {
    Planner planner(spec, d);
    for (const auto& [act, slots] : d.acts) {
      if (slots.empty()) planner.templates_for(act, "");
      for (const auto& [slot, prop] : slots) {
        for (const auto& v : planner.templates_for(act, slot)) {
          if (prop == SlotProperty::informable && v.find("{value}") == std::string::npos) {
            throw ConfigError("synth: informable template for " + act + "." + slot + " lacks {value}");
          }
        }
        if (prop != SlotProperty::requestable) planner.pool_for(slot);
      }
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SynthResult synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  SynthResult result;
  for (const auto& d : spec.domains) {
    for (const auto& [act, slots] : d.acts) {
      if (slots.empty()) result.ontology.add_act(d.name, act);
      for (const auto& [slot, prop] : slots) result.ontology.add_slot(d.name, act, slot, prop);
    }
  }

  std::vector<Example> examples;
  for (const auto& d : spec.domains) {
    Rng rng(splitmix64(seed ^ fnv1a64(d.name)));
    Planner planner(spec, d);
    std::set<std::vector<SemanticEntry>> seen;
    std::vector<std::vector<PlannedEntry>> plans;
    const std::size_t max_attempts = 1000 + 2000 * d.distinct_srs;
    for (std::size_t attempt = 0; plans.size() < d.distinct_srs; ++attempt) {
      if (attempt >= max_attempts) {
        throw ConfigError("synth: could not draw " + std::to_string(d.distinct_srs) + " distinct SRs for domain " +
                          d.name + " (got " + std::to_string(plans.size()) + ")");
      }
      auto plan = planner.draw(rng);
      Rng probe(0);
      const auto key = planner.realize(plan, probe).sr.delexicalized_key(result.ontology);
      if (seen.insert(key).second) plans.push_back(std::move(plan));
    }
    for (const auto& plan : plans) {
      for (std::size_t k = 0; k < spec.examples_per_sr; ++k) examples.push_back(planner.realize(plan, rng));
    }
  }

  // Split each domain separately so every domain has train, dev and test
  // examples.
  Rng split_rng(splitmix64(seed ^ 0x5bd1e995ULL));
  std::size_t begin = 0;
  for (const auto& d : spec.domains) {
    const std::size_t count = d.distinct_srs * spec.examples_per_sr;
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = begin + i;
    shuffle_in_place(order, split_rng);
    const auto n = static_cast<double>(count);
    const auto n_train = static_cast<std::size_t>(std::llround(n * spec.train_share));
    const auto n_dev = std::min(count - n_train, static_cast<std::size_t>(std::llround(n * spec.dev_share)));
    for (std::size_t r = 0; r < count; ++r) {
      examples[order[r]].split = r < n_train ? Split::train : r < n_train + n_dev ? Split::dev : Split::test;
    }
    begin += count;
  }

  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& ex = examples[i];
    ex.record = i + 1;
    ex.multi_domain = ex.sr.is_multi_domain();
    validate(ex.sr, result.ontology);
    const auto delex = delexicalize(ex.sr, result.ontology, ex.text);
    if (!delex.unmatched.empty() || lexicalize(ex.sr, result.ontology, delex.text) != ex.text) {
      throw ConfigError("synth: example \"" + ex.text + "\" does not delexicalize cleanly; check value pools");
    }
  }
  result.corpus.examples = std::move(examples);
  return result;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  try {
    SynthSpec spec;
    for (const auto& [name, dj] : j.at("domains").items()) {
      SynthDomain d;
      d.name = name;
      d.noun = dj.value("noun", name);
      d.distinct_srs = dj.at("distinct_srs").get<std::size_t>();
      d.max_acts = dj.value("max_acts", std::size_t{2});
      d.max_slots = dj.value("max_slots", std::size_t{3});
      for (const auto& [act, slots] : dj.at("acts").items()) {
        auto& slot_map = d.acts[act];
        for (const auto& [slot, prop] : slots.items()) {
          auto p = parse_property(prop.get<std::string>());
          if (!p) throw ConfigError("synth: unknown property for " + name + "." + act + "." + slot);
          slot_map[slot] = *p;
        }
      }
      if (dj.contains("values")) d.values = dj["values"].get<std::map<std::string, std::vector<std::string>>>();
      spec.domains.push_back(std::move(d));
    }
    spec.templates = j.at("templates").get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("values")) spec.values = j["values"].get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("joiners")) spec.joiners = j["joiners"].get<std::map<std::string, std::string>>();
    if (j.contains("prefixes")) spec.prefixes = j["prefixes"].get<std::map<std::string, std::string>>();
    if (j.contains("repeats")) spec.repeats = j["repeats"].get<std::map<std::string, std::size_t>>();
    spec.examples_per_sr = j.value("examples_per_sr", std::size_t{1});
    spec.train_share = j.value("train_share", 0.6);
    spec.dev_share = j.value("dev_share", 0.2);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth: malformed spec: ") + e.what());
  }
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth spec " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
  return from_json(j);
}

SynthSpec default_synth_spec(std::size_t distinct_srs_per_domain, std::size_t examples_per_sr) {
  const auto I = SlotProperty::informable;
  const auto R = SlotProperty::requestable;
  SynthSpec spec;
  spec.examples_per_sr = examples_per_sr;

  SynthDomain rest;
  rest.name = "restaurant";
  rest.noun = "restaurant";
  rest.distinct_srs = distinct_srs_per_domain;
  rest.acts = {
      {"inform", {{"area", I}, {"food", I}, {"pricerange", I}, {"name", I}, {"choice", I}}},
      {"request", {{"area", R}, {"food", R}, {"pricerange", R}}},
      {"recommend", {{"name", I}, {"area", I}, {"food", I}}},
      {"nooffer", {{"area", I}, {"food", I}}},
      {"reqmore", {}},
  };
  rest.values = {{"name", {"golden house", "the rice boat", "curry garden", "la mimosa", "pizza express"}}};

  SynthDomain hotel;
  hotel.name = "hotel";
  hotel.noun = "hotel";
  hotel.distinct_srs = distinct_srs_per_domain;
  hotel.acts = {
      {"inform", {{"area", I}, {"pricerange", I}, {"name", I}, {"choice", I}, {"stars", I}}},
      {"request", {{"area", R}, {"pricerange", R}, {"stars", R}, {"parking", R}}},
      {"recommend", {{"name", I}, {"area", I}, {"stars", I}}},
      {"select", {{"type", I}}},
      {"reqmore", {}},
  };
  hotel.values = {{"name", {"acorn lodge", "the lensfield", "alpha milton", "cityroomz", "warkworth house"}}};

  spec.domains = {rest, hotel};
  spec.values = {
      {"area", {"north", "south", "east", "west", "centre"}},
      {"food", {"thai", "italian", "indian", "chinese", "british", "french"}},
      {"pricerange", {"cheap", "moderate", "expensive"}},
      {"choice", {"two", "three", "four", "five", "several"}},
      {"stars", {"3", "4", "5"}},
      {"type", {"guesthouse", "hostel", "boutique inn"}},
  };
  spec.templates = {
      {"inform.area", {"it is in the {value} part of town", "the {domain} is in the {value}"}},
      {"inform.food", {"it serves {value} food"}},
      {"inform.pricerange", {"it is in the {value} price range", "the prices are {value}"}},
      {"inform.name", {"the {domain} is called {value}", "{value} is a nice {domain}"}},
      {"inform.choice", {"there are {value} options", "i have {value} places"}},
      {"inform.stars", {"it has {value} stars"}},
      {"request.area", {"which area would you like"}},
      {"request.food", {"what kind of food would you like"}},
      {"request.pricerange", {"what price range do you want"}},
      {"request.stars", {"how many stars should the {domain} have"}},
      {"request.parking", {"do you need parking"}},
      {"recommend.name", {"i recommend {value}", "how about {value}"}},
      {"recommend.area", {"in the {value}"}},
      {"recommend.food", {"serving {value} food"}},
      {"recommend.stars", {"with {value} stars"}},
      {"nooffer.area", {"there is no {domain} in the {value}"}},
      {"nooffer.food", {"nothing serves {value} food"}},
      {"select.type", {"a {value}"}},
      {"reqmore", {"is there anything else i can help with"}},
  };
  spec.joiners = {{"select", " or "}};
  spec.prefixes = {{"select", "would you prefer"}};
  spec.repeats = {{"select.type", 2}};
  return spec;
}

}  // namespace treenlg
