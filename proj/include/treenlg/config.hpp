// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "treenlg/model.hpp"

namespace treenlg {

/// Training hyperparameters. The defaults are the shipped configuration.
struct TrainConfig {
  std::size_t hidden = 100;
  std::size_t layers = 1;
  double dropout = 0.25;
  double learning_rate = 0.0025;
  double adapt_learning_rate = 0.001;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  Mode mode = Mode::tree_att;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::size_t beam = 10;
  std::size_t max_length = 80;

  /// Throws ConfigError on a non-positive size or rate, or layers != 1.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
/// Overlays the keys of `j` on `base`. Unknown keys and wrong types throw
/// ConfigError.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace treenlg
