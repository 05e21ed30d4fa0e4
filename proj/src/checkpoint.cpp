// SPDX-License-Identifier: Apache-2.0
#include "treenlg/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "treenlg/error.hpp"

namespace treenlg {

nlohmann::json to_json(const Checkpoint& c) {
  const Model& m = c.model;
  nlohmann::json tensors = nlohmann::json::object();
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const Tensor& t = m.params()[i];
    tensors[m.params().name(i)] = {{"shape", t.shape()}, {"data", t.values()}};
  }
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < m.params().size(); ++i) names.push_back(m.params().name(i));
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", to_json(c.config)},
          {"mode", std::string(to_string(m.mode()))},
          {"hidden", m.hidden()},
          {"ontology", m.ontology().to_json()},
          {"fingerprint", m.ontology().fingerprint()},
          {"vocabulary", m.vocab().words()},
          {"epoch", c.epoch},
          {"dev", {{"ser", c.dev_ser}, {"bleu", c.dev_bleu}}},
          {"tensor_order", std::move(names)},
          {"tensors", std::move(tensors)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat) throw ParseError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CompatibilityError("checkpoint version " + std::to_string(version) + " is not supported");
    }
    Ontology ontology = Ontology::from_json(j.at("ontology"));
    const std::string fp = j.at("fingerprint").get<std::string>();
    if (fp != ontology.fingerprint()) {
      throw CompatibilityError("checkpoint fingerprint " + fp + " does not match its embedded ontology (" +
                               ontology.fingerprint() + ")");
    }
    TrainConfig config = config_from_json(j.at("config"));
    auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw ParseError("unknown mode in checkpoint");
    Vocabulary vocab = Vocabulary::from_words(j.at("vocabulary").get<std::vector<std::string>>());
    ParamSet params;
    const auto& tensors = j.at("tensors");
    for (const auto& name : j.at("tensor_order")) {
      const auto& t = tensors.at(name.get<std::string>());
      params.add(name.get<std::string>(),
                 Tensor(t.at("shape").get<Shape>(), t.at("data").get<std::vector<double>>()));
    }
    Model model(*mode, std::move(ontology), std::move(vocab), j.at("hidden").get<std::size_t>(), std::move(params));
    return Checkpoint{std::move(model), config, j.at("epoch").get<std::size_t>(), j.at("dev").at("ser").get<double>(),
                      j.at("dev").at("bleu").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string("malformed checkpoint tensor: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("malformed checkpoint config: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ValidationError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, to_json(c).dump());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open checkpoint");
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void require_compatible(const Checkpoint& c, const Ontology& ontology) {
  const std::string have = c.model.ontology().fingerprint();
  const std::string want = ontology.fingerprint();
  if (have != want) {
    throw CompatibilityError("checkpoint was trained on ontology " + have + " but the given ontology is " + want);
  }
}

}  // namespace treenlg
