// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treenlg/corpus.hpp"
#include "treenlg/ontology.hpp"

namespace treenlg {

/// Declarative description of a templated multi-domain corpus.
///
/// Sentences are assembled per act: each (act, slot) has phrase templates
/// (keyed "act.slot", or "act" for slotless acts, optionally prefixed by a
/// domain as "domain.act.slot"), which may use {value} and {domain}. The
/// phrases of one act are joined and closed with '?' for request, select and reqmore
/// and '.' otherwise. Each distinct SR fixes its entry order and phrase variants, so
/// all examples of one SR share a delexicalized text.
struct SynthDomain {
  std::string name;
  std::string noun;
  std::size_t distinct_srs = 0;
  std::size_t max_acts = 2;
  std::size_t max_slots = 3;
  /// act -> slot -> property (empty map: act without slots)
  std::map<std::string, std::map<std::string, SlotProperty>> acts;
  /// slot -> value pool (overrides the spec-wide pools)
  std::map<std::string, std::vector<std::string>> values;
};

struct SynthSpec {
  std::vector<SynthDomain> domains;
  std::map<std::string, std::vector<std::string>> templates;
  std::map<std::string, std::vector<std::string>> values;
  std::map<std::string, std::string> joiners;   // act -> joiner between phrases (default " and ")
  std::map<std::string, std::string> prefixes;  // act -> words opening the clause
  std::map<std::string, std::size_t> repeats;  // "act.slot" -> occurrences in one SR
  std::size_t examples_per_sr = 1;
  double train_share = 0.6;
  double dev_share = 0.2;

  static SynthSpec from_json(const nlohmann::json& j);
  static SynthSpec load(const std::filesystem::path& path);
};

struct SynthResult {
  Ontology ontology;
  Corpus corpus;
};

/// Deterministic per seed. Throws ConfigError when a template refers to an
/// undeclared slot, a declared slot lacks a template, or the requested
/// distinct-SR count cannot be reached.
SynthResult synth_corpus(const SynthSpec& spec, std::uint64_t seed);

/// Two overlapping domains (restaurant, hotel) used for demos and tests.
SynthSpec default_synth_spec(std::size_t distinct_srs_per_domain = 50, std::size_t examples_per_sr = 1);

}  // namespace treenlg
