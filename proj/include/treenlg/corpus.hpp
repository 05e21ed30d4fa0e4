// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treenlg/ontology.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

enum class Split { train, dev, test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct Example {
  SemanticRepresentation sr;
  std::string text;
  Split split = Split::train;
  bool multi_domain = false;
  std::size_t record = 0;  // 1-based line number in the source file
};

struct Corpus {
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
  std::vector<const Example*> select(Split split) const;
  /// Single-domain examples of `domain` in `split`.
  std::vector<const Example*> select(Split split, const std::string& domain) const;
  std::size_t multi_domain_count() const;
};

/// Parses the JSON Lines wire format and validates every SR against the
/// ontology. Errors name the record (line) number.
Corpus parse_corpus(std::istream& in, const Ontology& ontology);
Corpus load_corpus(const std::filesystem::path& path, const Ontology& ontology);

nlohmann::json to_json(const Example& e);
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Distinct delexicalized SRs per domain (multi-domain examples counted
/// under every domain they touch).
std::map<std::string, std::size_t> distinct_sr_counts(const Corpus& corpus, const Ontology& ontology);

}  // namespace treenlg
