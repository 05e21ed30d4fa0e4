// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace treenlg {

enum class SlotProperty { requestable, informable, binary };

std::string_view to_string(SlotProperty p);
std::optional<SlotProperty> parse_property(std::string_view s);

/// (domain, act, slot) with a total, name-based order.
struct Triple {
  std::string domain;
  std::string act;
  std::string slot;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

/// Domain -> act -> slot -> property schema. The global label sets D, A and S
/// are the sorted unions over all domains; their order is the canonical label
/// order used by attention outputs.
class Ontology {
 public:
  Ontology() = default;

  /// Builder entry points; names are validated. Re-adding a triple throws.
  void add_slot(const std::string& domain, const std::string& act, const std::string& slot, SlotProperty p);
  void add_act(const std::string& domain, const std::string& act);

  static Ontology from_json(const nlohmann::json& j);
  /// Parses JSON text, rejecting duplicate keys.
  static Ontology parse(std::string_view text);
  static Ontology load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<std::string>& domains() const { return domains_; }
  const std::vector<std::string>& acts() const { return acts_; }
  const std::vector<std::string>& slots() const { return slots_; }

  bool has_domain(const std::string& d) const;
  bool has_act(const std::string& d, const std::string& a) const;
  std::vector<std::string> acts_of(const std::string& domain) const;
  std::vector<std::string> slots_of(const std::string& domain, const std::string& act) const;
  std::optional<SlotProperty> property(const std::string& d, const std::string& a, const std::string& s) const;
  std::optional<SlotProperty> property(const Triple& t) const { return property(t.domain, t.act, t.slot); }

  std::optional<std::size_t> domain_index(std::string_view name) const;
  std::optional<std::size_t> act_index(std::string_view name) const;
  std::optional<std::size_t> slot_index(std::string_view name) const;

  /// All (domain, act, slot) triples in canonical order.
  std::vector<Triple> triples() const;
  std::size_t triple_count() const;

  /// Stable 64-bit hash of the canonical JSON, as 16 hex digits.
  std::string fingerprint() const;

  bool operator==(const Ontology& other) const { return tree_ == other.tree_; }

 private:
  void refresh();

  std::map<std::string, std::map<std::string, std::map<std::string, SlotProperty>>> tree_;
  std::vector<std::string> domains_;
  std::vector<std::string> acts_;
  std::vector<std::string> slots_;
};

/// Names are non-empty and use only [a-z0-9_].
bool valid_name(std::string_view name);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace treenlg
