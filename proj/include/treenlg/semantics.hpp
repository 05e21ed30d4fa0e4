// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/ontology.hpp"

namespace treenlg {

/// A slot value: literal text, the request marker ("?"), or no value at all
/// (an act without slots).
struct SlotValue {
  enum class Kind { text, request, none };
  Kind kind = Kind::none;
  std::string text;

  static SlotValue of(std::string s) { return {Kind::text, std::move(s)}; }
  static SlotValue request() { return {Kind::request, {}}; }
  static SlotValue none() { return {Kind::none, {}}; }

  bool is_text() const { return kind == Kind::text; }
  auto operator<=>(const SlotValue&) const = default;
  bool operator==(const SlotValue&) const = default;
};

/// One (domain, act, slot, value) entry. `slot` is empty for Kind::none.
struct SemanticEntry {
  std::string domain;
  std::string act;
  std::string slot;
  SlotValue value;

  Triple triple() const { return {domain, act, slot}; }
  auto operator<=>(const SemanticEntry&) const = default;
  bool operator==(const SemanticEntry&) const = default;
};

struct SemanticRepresentation {
  std::vector<SemanticEntry> entries;

  std::set<std::string> domains() const;
  bool is_multi_domain() const { return domains().size() > 1; }
  /// Entries as a sorted multiset; two SRs are the same meaning iff equal.
  std::vector<SemanticEntry> canonical() const;
  /// Sorted entries with informable text values blanked: the delexicalized SR.
  std::vector<SemanticEntry> delexicalized_key(const Ontology& ontology) const;

  bool operator==(const SemanticRepresentation&) const = default;
};

/// Throws ValidationError when an entry is not licensed by `ontology`.
void validate(const SemanticRepresentation& sr, const Ontology& ontology);

nlohmann::json to_json(const SemanticRepresentation& sr);
/// Accepts the corpus wire format; value "?" is a request, null (or a
/// missing slot) marks an act without slots.
SemanticRepresentation sr_from_json(const nlohmann::json& j);

/// Delexicalized slot token "@domain-act-slot", with the occurrence index
/// appended to the slot when the triple repeats inside one SR.
struct DelexToken {
  Triple triple;
  int occurrence = 0;  // 0 when the triple does not repeat

  std::string surface() const;
  auto operator<=>(const DelexToken&) const = default;
  bool operator==(const DelexToken&) const = default;
};

struct LicensedToken {
  DelexToken token;
  std::size_t entry = 0;  // index into SemanticRepresentation::entries
};

/// Tokens an SR licenses: one per informable entry with a text value, in
/// entry order, occurrence-indexed per repeated triple.
std::vector<LicensedToken> licensed_tokens(const SemanticRepresentation& sr, const Ontology& ontology);

/// Number of informable entries sharing `triple` within the SR.
std::size_t triple_multiplicity(const SemanticRepresentation& sr, const Triple& triple);

/// Lowercases, splits , . ? ! into their own tokens and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);
bool is_slot_token(std::string_view token);

struct DelexResult {
  std::string text;
  std::vector<Triple> unmatched;
};

/// Replaces informable values (case-insensitive, longest first, leftmost
/// whole-word occurrence) by their delex tokens.
DelexResult delexicalize(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text);

/// Inverse of delexicalize. Throws LexicalizationError for any '@' token
/// the SR does not license.
std::string lexicalize(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text);

struct LenientLexResult {
  std::string text;
  std::vector<std::string> unresolved;  // tokens left verbatim
};

/// Like lexicalize but leaves unknown tokens in place and reports them.
LenientLexResult lexicalize_lenient(const SemanticRepresentation& sr, const Ontology& ontology, std::string_view text);

}  // namespace treenlg
