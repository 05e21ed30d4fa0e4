// SPDX-License-Identifier: Apache-2.0
#include "treenlg/ontology.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "treenlg/error.hpp"

namespace treenlg {

std::string_view to_string(SlotProperty p) {
  switch (p) {
    case SlotProperty::requestable: return "requestable";
    case SlotProperty::informable: return "informable";
    case SlotProperty::binary: return "binary";
  }
  return "?";
}

std::optional<SlotProperty> parse_property(std::string_view s) {
  if (s == "requestable") return SlotProperty::requestable;
  if (s == "informable") return SlotProperty::informable;
  if (s == "binary") return SlotProperty::binary;
  return std::nullopt;
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

static void require_name(const std::string& name, const std::string& where) {
  if (!valid_name(name)) {
    throw ParseError("invalid name '" + name + "' at " + where + " (names use lowercase letters, digits, '_')");
  }
}

void Ontology::add_act(const std::string& domain, const std::string& act) {
  require_name(domain, "domain");
  require_name(act, domain);
  tree_[domain][act];
  refresh();
}

void Ontology::add_slot(const std::string& domain, const std::string& act, const std::string& slot, SlotProperty p) {
  require_name(domain, "domain");
  require_name(act, domain);
  require_name(slot, domain + "." + act);
  auto& slots = tree_[domain][act];
  if (slots.contains(slot)) {
    throw ParseError("duplicate triple " + domain + "." + act + "." + slot);
  }
  slots.emplace(slot, p);
  refresh();
}

void Ontology::refresh() {
  std::set<std::string> acts, slots;
  domains_.clear();
  for (const auto& [d, amap] : tree_) {
    domains_.push_back(d);
    for (const auto& [a, smap] : amap) {
      acts.insert(a);
      for (const auto& [s, p] : smap) slots.insert(s);
    }
  }
  acts_.assign(acts.begin(), acts.end());
  slots_.assign(slots.begin(), slots.end());
}

Ontology Ontology::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("ontology: top level must be an object of domains");
  Ontology o;
  for (const auto& [domain, acts] : j.items()) {
    require_name(domain, "domain");
    if (!acts.is_object()) throw ParseError("ontology: field '" + domain + "' must be an object of acts");
    for (const auto& [act, slots] : acts.items()) {
      const std::string where = domain + "." + act;
      require_name(act, where);
      if (!slots.is_object()) throw ParseError("ontology: field '" + where + "' must be an object of slots");
      o.tree_[domain][act];
      for (const auto& [slot, prop] : slots.items()) {
        const std::string field = where + "." + slot;
        require_name(slot, field);
        if (!prop.is_string()) throw ParseError("ontology: field '" + field + "' must be a property name");
        auto p = parse_property(prop.get<std::string>());
        if (!p) {
          throw ParseError("ontology: unknown property '" + prop.get<std::string>() + "' at field '" + field + "'");
        }
        o.tree_[domain][act][slot] = *p;
      }
    }
  }
  o.refresh();
  return o;
}

Ontology Ontology::parse(std::string_view text) {
  // nlohmann keeps the last of duplicate keys; catch them during parsing.
  std::vector<std::set<std::string>> seen;
  std::vector<std::string> path;
  std::string duplicate;
  std::string pending_key;
  auto cb = [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
    using E = nlohmann::json::parse_event_t;
    switch (event) {
      case E::object_start:
        seen.emplace_back();
        path.push_back(pending_key);
        break;
      case E::object_end:
        if (!seen.empty()) seen.pop_back();
        if (!path.empty()) path.pop_back();
        break;
      case E::key: {
        pending_key = parsed.get<std::string>();
        if (!seen.empty() && !seen.back().insert(pending_key).second && duplicate.empty()) {
          std::string where;
          for (std::size_t i = 1; i < path.size(); ++i) where += path[i] + ".";
          duplicate = where + pending_key;
        }
        break;
      }
      default: break;
    }
    (void)depth;
    return true;
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end(), cb);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("ontology: malformed JSON: ") + e.what());
  }
  if (!duplicate.empty()) throw ParseError("ontology: duplicate entry '" + duplicate + "'");
  return from_json(j);
}

Ontology Ontology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ontology file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json Ontology::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [d, amap] : tree_) {
    nlohmann::json acts = nlohmann::json::object();
    for (const auto& [a, smap] : amap) {
      nlohmann::json slots = nlohmann::json::object();
      for (const auto& [s, p] : smap) slots[s] = std::string(to_string(p));
      acts[a] = slots;
    }
    j[d] = acts;
  }
  return j;
}

bool Ontology::has_domain(const std::string& d) const { return tree_.contains(d); }

bool Ontology::has_act(const std::string& d, const std::string& a) const {
  auto it = tree_.find(d);
  return it != tree_.end() && it->second.contains(a);
}

std::vector<std::string> Ontology::acts_of(const std::string& domain) const {
  std::vector<std::string> out;
  if (auto it = tree_.find(domain); it != tree_.end()) {
    for (const auto& [a, _] : it->second) out.push_back(a);
  }
  return out;
}

std::vector<std::string> Ontology::slots_of(const std::string& domain, const std::string& act) const {
  std::vector<std::string> out;
  if (auto it = tree_.find(domain); it != tree_.end()) {
    if (auto jt = it->second.find(act); jt != it->second.end()) {
      for (const auto& [s, _] : jt->second) out.push_back(s);
    }
  }
  return out;
}

std::optional<SlotProperty> Ontology::property(const std::string& d, const std::string& a, const std::string& s) const {
  auto it = tree_.find(d);
  if (it == tree_.end()) return std::nullopt;
  auto jt = it->second.find(a);
  if (jt == it->second.end()) return std::nullopt;
  auto kt = jt->second.find(s);
  if (kt == jt->second.end()) return std::nullopt;
  return kt->second;
}

static std::optional<std::size_t> find_index(const std::vector<std::string>& v, std::string_view name) {
  auto it = std::lower_bound(v.begin(), v.end(), name);
  if (it == v.end() || *it != name) return std::nullopt;
  return static_cast<std::size_t>(it - v.begin());
}

std::optional<std::size_t> Ontology::domain_index(std::string_view name) const { return find_index(domains_, name); }
std::optional<std::size_t> Ontology::act_index(std::string_view name) const { return find_index(acts_, name); }
std::optional<std::size_t> Ontology::slot_index(std::string_view name) const { return find_index(slots_, name); }

std::vector<Triple> Ontology::triples() const {
  std::vector<Triple> out;
  for (const auto& [d, amap] : tree_) {
    for (const auto& [a, smap] : amap) {
      for (const auto& [s, _] : smap) out.push_back({d, a, s});
    }
  }
  return out;
}

std::size_t Ontology::triple_count() const {
  std::size_t n = 0;
  for (const auto& [d, amap] : tree_) {
    for (const auto& [a, smap] : amap) n += smap.size();
  }
  return n;
}

std::string Ontology::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

}  // namespace treenlg
