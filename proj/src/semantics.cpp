// SPDX-License-Identifier: Apache-2.0
#include "treenlg/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "treenlg/error.hpp"

namespace treenlg {

std::set<std::string> SemanticRepresentation::domains() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.domain);
  return out;
}

std::vector<SemanticEntry> SemanticRepresentation::canonical() const {
  auto out = entries;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SemanticEntry> SemanticRepresentation::delexicalized_key(const Ontology& ontology) const {
  auto out = entries;
  for (auto& e : out) {
    if (e.value.is_text() && ontology.property(e.domain, e.act, e.slot) == SlotProperty::informable) {
      e.value.text.clear();
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

static std::string describe(const SemanticEntry& e) {
  return "(" + e.domain + ", " + e.act + ", " + (e.slot.empty() ? "-" : e.slot) + ")";
}

void validate(const SemanticRepresentation& sr, const Ontology& ontology) {
  std::set<SemanticEntry> seen;
  for (const auto& e : sr.entries) {
    if (e.value.kind == SlotValue::Kind::none) {
      if (!e.slot.empty()) throw ValidationError("entry " + describe(e) + " has a slot but no value");
      if (!ontology.has_act(e.domain, e.act)) throw ValidationError("act " + describe(e) + " not in ontology");
    } else {
      auto prop = ontology.property(e.domain, e.act, e.slot);
      if (!prop) throw ValidationError("triple " + describe(e) + " not in ontology");
      if (*prop == SlotProperty::requestable && e.value.kind != SlotValue::Kind::request) {
        throw ValidationError("requestable slot " + describe(e) + " must carry '?'");
      }
      if (*prop == SlotProperty::informable && (e.value.kind != SlotValue::Kind::text || e.value.text.empty())) {
        throw ValidationError("informable slot " + describe(e) + " needs a text value");
      }
    }
    if (!seen.insert(e).second) throw ValidationError("duplicate entry " + describe(e));
  }
}

nlohmann::json to_json(const SemanticRepresentation& sr) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : sr.entries) {
    nlohmann::json j;
    j["domain"] = e.domain;
    j["act"] = e.act;
    j["slot"] = e.slot.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.slot);
    switch (e.value.kind) {
      case SlotValue::Kind::text: j["value"] = e.value.text; break;
      case SlotValue::Kind::request: j["value"] = "?"; break;
      case SlotValue::Kind::none: j["value"] = nullptr; break;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

SemanticRepresentation sr_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("\"sr\" must be an array");
  SemanticRepresentation sr;
  for (const auto& item : j) {
    if (!item.is_object()) throw ParseError("SR entry must be an object");
    SemanticEntry e;
    auto str_field = [&](const char* key) {
      if (!item.contains(key) || !item[key].is_string()) {
        throw ParseError(std::string("SR entry field \"") + key + "\" must be a string");
      }
      return item[key].get<std::string>();
    };
    e.domain = str_field("domain");
    e.act = str_field("act");
    const auto& value = item.contains("value") ? item["value"] : nlohmann::json(nullptr);
    if (value.is_null()) {
      e.value = SlotValue::none();
      if (item.contains("slot") && !item["slot"].is_null()) {
        throw ParseError("SR entry with null value must not name a slot");
      }
    } else if (value.is_string()) {
      e.slot = str_field("slot");
      const auto v = value.get<std::string>();
      e.value = v == "?" ? SlotValue::request() : SlotValue::of(v);
    } else {
      throw ParseError("SR entry \"value\" must be a string or null");
    }
    sr.entries.push_back(std::move(e));
  }
  return sr;
}

std::string DelexToken::surface() const {
  std::string s = "@" + triple.domain + "-" + triple.act + "-" + triple.slot;
  if (occurrence > 0) s += std::to_string(occurrence);
  return s;
}

std::size_t triple_multiplicity(const SemanticRepresentation& sr, const Triple& triple) {
  return static_cast<std::size_t>(std::count_if(sr.entries.begin(), sr.entries.end(), [&](const SemanticEntry& e) {
    return e.value.is_text() && e.triple() == triple;
  }));
}

std::vector<LicensedToken> licensed_tokens(const SemanticRepresentation& sr, const Ontology& ontology) {
  std::map<Triple, int> total, seen;
  auto licensed = [&](const SemanticEntry& e) {
    return e.value.is_text() && ontology.property(e.domain, e.act, e.slot) == SlotProperty::informable;
  };
  for (const auto& e : sr.entries) {
    if (licensed(e)) ++total[e.triple()];
  }
  std::vector<LicensedToken> out;
  for (std::size_t i = 0; i < sr.entries.size(); ++i) {
    const auto& e = sr.entries[i];
    if (!licensed(e)) continue;
    const Triple t = e.triple();
    const int occ = ++seen[t];
    out.push_back({DelexToken{t, total[t] > 1 ? occ : 0}, i});
  }
  return out;
}

static bool is_punct(char c) { return c == ',' || c == '.' || c == '?' || c == '!'; }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool is_slot_token(std::string_view token) { return !token.empty() && token.front() == '@'; }

static std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

static bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

DelexResult delexicalize(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text) {
  struct Candidate {
    std::string value;
    std::string surface;
    Triple triple;
    std::size_t order;
  };
  std::vector<Candidate> cands;
  for (const auto& lt : licensed_tokens(sr, ontology)) {
    cands.push_back({lower(sr.entries[lt.entry].value.text), lt.token.surface(), lt.token.triple, cands.size()});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value.size() > b.value.size(); });

  const std::string low = lower(text);
  struct Span {
    std::size_t begin, end;
    std::string surface;
  };
  std::vector<Span> spans;
  DelexResult result;
  std::vector<std::pair<std::size_t, Triple>> unmatched;
  for (const auto& c : cands) {
    bool placed = false;
    if (!c.value.empty()) {
      for (std::size_t pos = low.find(c.value); pos != std::string::npos; pos = low.find(c.value, pos + 1)) {
        const std::size_t end = pos + c.value.size();
        const bool left_ok = pos == 0 || !word_char(low[pos - 1]) || !word_char(low[pos]);
        const bool right_ok = end == low.size() || !word_char(low[end]) || !word_char(low[end - 1]);
        const bool overlaps = std::any_of(spans.begin(), spans.end(),
                                          [&](const Span& s) { return pos < s.end && s.begin < end; });
        if (left_ok && right_ok && !overlaps) {
          spans.push_back({pos, end, c.surface});
          placed = true;
          break;
        }
      }
    }
    if (!placed) unmatched.emplace_back(c.order, c.triple);
  }
  std::sort(unmatched.begin(), unmatched.end());
  for (auto& [_, t] : unmatched) result.unmatched.push_back(std::move(t));

  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    result.text.append(text.substr(cursor, s.begin - cursor));
    result.text += s.surface;
    cursor = s.end;
  }
  result.text.append(text.substr(cursor));
  return result;
}

static bool token_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-'; }

template <typename OnUnknown>
static std::string substitute(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text,
                              OnUnknown on_unknown) {
  std::map<std::string, std::string, std::less<>> values;
  for (const auto& lt : licensed_tokens(sr, ontology)) values[lt.token.surface()] = sr.entries[lt.entry].value.text;
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '@') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && token_char(text[j])) ++j;
    const std::string_view tok = text.substr(i, j - i);
    if (auto it = values.find(tok); it != values.end()) {
      out += it->second;
    } else {
      on_unknown(std::string(tok));
      out.append(tok);
    }
    i = j;
  }
  return out;
}

std::string lexicalize(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text) {
  return substitute(sr, ontology, text, [](const std::string& tok) {
    throw LexicalizationError("no SR entry for token " + tok);
  });
}

LenientLexResult lexicalize_lenient(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text) {
  LenientLexResult r;
  r.text = substitute(sr, ontology, text, [&](const std::string& tok) { r.unresolved.push_back(tok); });
  return r;
}

}  // namespace treenlg
