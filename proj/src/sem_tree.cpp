// SPDX-License-Identifier: Apache-2.0
#include "treenlg/sem_tree.hpp"

#include <algorithm>
#include <map>

#include "treenlg/error.hpp"

namespace treenlg {

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::root: return "root";
    case Layer::domain: return "domain";
    case Layer::act: return "act";
    case Layer::slot: return "slot";
    case Layer::property: return "property";
  }
  return "?";
}

EncoderTokens::EncoderTokens(const Ontology& ontology) {
  names_.push_back("root:<root>");
  for (const auto& d : ontology.domains()) names_.push_back("domain:" + d);
  for (const auto& a : ontology.acts()) names_.push_back("act:" + a);
  for (const auto& s : ontology.slots()) names_.push_back("slot:" + s);
  names_.push_back("slot:" + std::string(kNoSlot));
  for (auto p : {SlotProperty::requestable, SlotProperty::informable, SlotProperty::binary}) {
    names_.push_back("property:" + std::string(to_string(p)));
  }
  names_.push_back("property:" + std::string(kNoProperty));
}

std::size_t EncoderTokens::id(Layer layer, std::string_view name) const {
  const std::string key = std::string(to_string(layer)) + ":" + std::string(name);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == key) return i;
  }
  throw ContractError("encoder token " + key + " not in ontology");
}

std::size_t SemTree::depth(std::size_t node) const {
  std::size_t d = 0;
  while (node != 0) {
    node = nodes[node].parent;
    ++d;
  }
  return d;
}

std::vector<std::size_t> SemTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SemTree::nodes_in(Layer layer) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].layer == layer) out.push_back(i);
  }
  return out;
}

SemTree build_tree(const SemanticRepresentation& sr, const Ontology& ontology, const EncoderTokens& tokens) {
  // domain -> act -> slot -> property label; std::map keeps canonical order.
  std::map<std::string, std::map<std::string, std::map<std::string, std::string>>> shape;
  for (const auto& e : sr.entries) {
    auto& acts = shape[e.domain][e.act];
    if (e.value.kind == SlotValue::Kind::none) {
      acts[std::string(EncoderTokens::kNoSlot)] = std::string(EncoderTokens::kNoProperty);
    } else {
      auto p = ontology.property(e.domain, e.act, e.slot);
      if (!p) throw ContractError("SR entry (" + e.domain + ", " + e.act + ", " + e.slot + ") not in ontology");
      acts[e.slot] = std::string(to_string(*p));
    }
  }
  SemTree tree;
  tree.nodes.push_back({Layer::root, "<root>", tokens.root(), 0, {}});
  auto add = [&](Layer layer, const std::string& label, std::size_t parent) {
    tree.nodes.push_back({layer, label, tokens.id(layer, label), parent, {}});
    const std::size_t id = tree.nodes.size() - 1;
    tree.nodes[parent].children.push_back(id);
    return id;
  };
  for (const auto& [d, acts] : shape) {
    const auto dn = add(Layer::domain, d, 0);
    for (const auto& [a, slots] : acts) {
      const auto an = add(Layer::act, a, dn);
      for (const auto& [s, p] : slots) {
        const auto sn = add(Layer::slot, s, an);
        add(Layer::property, p, sn);
      }
    }
  }
  for (auto& n : tree.nodes) {
    std::sort(n.children.begin(), n.children.end(),
              [&](std::size_t x, std::size_t y) { return tree.nodes[x].token < tree.nodes[y].token; });
  }
  return tree;
}

std::set<TreePath> tree_paths(const SemTree& tree) {
  std::set<TreePath> out;
  for (std::size_t leaf : tree.leaves()) {
    if (leaf == 0) continue;
    const auto& pn = tree.nodes[leaf];
    const auto& sn = tree.nodes[pn.parent];
    const auto& an = tree.nodes[sn.parent];
    const auto& dn = tree.nodes[an.parent];
    TreePath path;
    path.triple = {dn.label, an.label, sn.label == EncoderTokens::kNoSlot ? "" : sn.label};
    if (pn.label != EncoderTokens::kNoProperty) path.property = parse_property(pn.label);
    out.insert(path);
  }
  return out;
}

std::set<TreePath> sr_paths(const SemanticRepresentation& sr, const Ontology& ontology) {
  std::set<TreePath> out;
  for (const auto& e : sr.entries) {
    TreePath path;
    path.triple = e.triple();
    if (e.value.kind != SlotValue::Kind::none) path.property = ontology.property(path.triple);
    out.insert(path);
  }
  return out;
}

}  // namespace treenlg
