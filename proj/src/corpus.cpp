// SPDX-License-Identifier: Apache-2.0
#include "treenlg/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "treenlg/error.hpp"

namespace treenlg {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::vector<const Example*> Corpus::select(Split split) const {
  std::vector<const Example*> out;
  for (const auto& e : examples) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

std::vector<const Example*> Corpus::select(Split split, const std::string& domain) const {
  std::vector<const Example*> out;
  for (const auto& e : examples) {
    if (e.split == split && !e.multi_domain && e.sr.domains().contains(domain)) out.push_back(&e);
  }
  return out;
}

std::size_t Corpus::multi_domain_count() const {
  std::size_t n = 0;
  for (const auto& e : examples) n += e.multi_domain ? 1 : 0;
  return n;
}

Corpus parse_corpus(std::istream& in, const Ontology& ontology) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "record " + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    Example ex;
    ex.record = lineno;
    try {
      if (!j.is_object()) throw ParseError("record must be a JSON object");
      if (!j.contains("sr")) throw ParseError("missing field \"sr\"");
      ex.sr = sr_from_json(j["sr"]);
      if (!j.contains("text") || !j["text"].is_string()) throw ParseError("field \"text\" must be a string");
      ex.text = j["text"].get<std::string>();
      if (ex.text.find_first_not_of(" \t") == std::string::npos) throw ParseError("field \"text\" is empty");
      if (!j.contains("split") || !j["split"].is_string()) throw ParseError("field \"split\" must be a string");
      auto split = parse_split(j["split"].get<std::string>());
      if (!split) throw ParseError("unknown split \"" + j["split"].get<std::string>() + "\"");
      ex.split = *split;
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      validate(ex.sr, ontology);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    ex.multi_domain = ex.sr.is_multi_domain();
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Ontology& ontology) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file " + path.string());
  return parse_corpus(in, ontology);
}

nlohmann::json to_json(const Example& e) {
  nlohmann::json j;
  j["sr"] = to_json(e.sr);
  j["text"] = e.text;
  j["split"] = std::string(to_string(e.split));
  return j;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& e : corpus.examples) out << to_json(e).dump() << '\n';
}

std::map<std::string, std::size_t> distinct_sr_counts(const Corpus& corpus, const Ontology& ontology) {
  std::map<std::string, std::set<std::vector<SemanticEntry>>> per_domain;
  for (const auto& e : corpus.examples) {
    auto key = e.sr.delexicalized_key(ontology);
    for (const auto& d : e.sr.domains()) per_domain[d].insert(key);
  }
  std::map<std::string, std::size_t> out;
  for (const auto& [d, set] : per_domain) out[d] = set.size();
  return out;
}

}  // namespace treenlg
