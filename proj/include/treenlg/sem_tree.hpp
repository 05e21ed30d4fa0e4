// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "treenlg/ontology.hpp"
#include "treenlg/semantics.hpp"

namespace treenlg {

enum class Layer { root, domain, act, slot, property };

std::string_view to_string(Layer layer);

/// Row table of the encoder embedding: one token per (layer, name), plus the
/// root, the synthetic no-slot node and its "none" property leaf.
class EncoderTokens {
 public:
  static constexpr std::string_view kNoSlot = "<noslot>";
  static constexpr std::string_view kNoProperty = "<none>";

  EncoderTokens() = default;
  explicit EncoderTokens(const Ontology& ontology);

  std::size_t size() const { return names_.size(); }
  std::size_t root() const { return 0; }
  /// Throws ContractError for names absent from the ontology.
  std::size_t id(Layer layer, std::string_view name) const;
  const std::string& name(std::size_t id) const { return names_[id]; }

 private:
  std::vector<std::string> names_;  // "layer:name"
};

struct TreeNode {
  Layer layer = Layer::root;
  std::string label;
  std::size_t token = 0;
  std::size_t parent = 0;  // root points at itself
  std::vector<std::size_t> children;
};

/// The activated root -> domain -> act -> slot -> property tree of one SR.
/// Node 0 is the root; every leaf sits at depth 4.
struct SemTree {
  std::vector<TreeNode> nodes;

  std::size_t depth(std::size_t node) const;
  std::vector<std::size_t> leaves() const;
  std::vector<std::size_t> nodes_in(Layer layer) const;
};

SemTree build_tree(const SemanticRepresentation& sr, const Ontology& ontology, const EncoderTokens& tokens);

/// Reads back (domain, act, slot, property) paths; slotless acts come back
/// with an empty slot and no property.
struct TreePath {
  Triple triple;
  std::optional<SlotProperty> property;
  auto operator<=>(const TreePath&) const = default;
  bool operator==(const TreePath&) const = default;
};
std::set<TreePath> tree_paths(const SemTree& tree);
/// The same paths computed from the SR directly.
std::set<TreePath> sr_paths(const SemanticRepresentation& sr, const Ontology& ontology);

}  // namespace treenlg
