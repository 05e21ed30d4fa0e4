// SPDX-License-Identifier: Apache-2.0
#include "treenlg/config.hpp"

#include <cmath>
#include <string>

#include "treenlg/error.hpp"

namespace treenlg {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(static_cast<double>(hidden), "hidden");
  positive(learning_rate, "learning_rate");
  positive(adapt_learning_rate, "adapt_learning_rate");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(max_epochs), "max_epochs");
  positive(static_cast<double>(patience), "patience");
  positive(static_cast<double>(beam), "beam");
  positive(static_cast<double>(max_length), "max_length");
  if (layers != 1) throw ConfigError("only single-layer networks are supported (layers = 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!std::isfinite(clip_norm)) throw ConfigError("clip_norm must be finite");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"hidden", c.hidden},
          {"layers", c.layers},
          {"dropout", c.dropout},
          {"learning_rate", c.learning_rate},
          {"adapt_learning_rate", c.adapt_learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"mode", std::string(to_string(c.mode))},
          {"clip_norm", c.clip_norm},
          {"beam", c.beam},
          {"max_length", c.max_length}};
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto size = [&](std::size_t& field) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw ConfigError(key + " must be a non-negative integer");
      }
      field = value.get<std::size_t>();
    };
    auto real = [&](double& field) {
      if (!value.is_number()) throw ConfigError(key + " must be a number");
      field = value.get<double>();
    };
    if (key == "hidden") size(base.hidden);
    else if (key == "layers") size(base.layers);
    else if (key == "dropout") real(base.dropout);
    else if (key == "learning_rate") real(base.learning_rate);
    else if (key == "adapt_learning_rate") real(base.adapt_learning_rate);
    else if (key == "batch_size") size(base.batch_size);
    else if (key == "max_epochs") size(base.max_epochs);
    else if (key == "patience") size(base.patience);
    else if (key == "seed") {
      if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<std::int64_t>() < 0)) {
        throw ConfigError("seed must be a non-negative integer");
      }
      base.seed = value.get<std::uint64_t>();
    } else if (key == "mode") {
      if (!value.is_string()) throw ConfigError("mode must be a string");
      auto m = parse_mode(value.get<std::string>());
      if (!m) throw ConfigError("unknown mode " + value.get<std::string>());
      base.mode = *m;
    } else if (key == "clip_norm") real(base.clip_norm);
    else if (key == "beam") size(base.beam);
    else if (key == "max_length") size(base.max_length);
    else throw ConfigError("unknown config key " + key);
  }
  return base;
}

}  // namespace treenlg
