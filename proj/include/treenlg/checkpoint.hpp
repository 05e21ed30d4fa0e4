// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "treenlg/config.hpp"
#include "treenlg/model.hpp"

namespace treenlg {

struct Checkpoint {
  Model model;
  TrainConfig config;
  std::size_t epoch = 0;
  double dev_ser = 0.0;
  double dev_bleu = 0.0;
};

inline constexpr std::string_view kCheckpointFormat = "treenlg-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Self-describing JSON: format, version, config, embedded ontology and its
/// fingerprint, vocabulary, epoch, dev metrics and named tensors. Doubles
/// round-trip exactly.
nlohmann::json to_json(const Checkpoint& c);
/// Throws ParseError for a malformed container and CompatibilityError when
/// the stored fingerprint disagrees with the embedded ontology.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws CompatibilityError unless `ontology` has the checkpoint's fingerprint.
void require_compatible(const Checkpoint& c, const Ontology& ontology);

/// Atomic text write: temp file in the same directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace treenlg
