#include "qintent/config.hpp"

#include <algorithm>
#include <stdexcept>

#include "qintent/errors.hpp"

namespace qintent {

using nlohmann::json;

void RunConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) {
      throw std::invalid_argument(std::string("config: ") + name + " must be positive");
    }
  };
  positive(embedding_dim, "embedding_dim");
  positive(hidden, "hidden");
  positive(layers, "layers");
  positive(ctw_hidden, "ctw_hidden");
  positive(batch_size, "batch_size");
  positive(epochs, "epochs");
  for (double rate : {dropout, ctw_input_dropout, cqr_input_dropout}) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw std::invalid_argument("config: dropout rates must lie in [0, 1)");
    }
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("config: learning_rate must be positive");
  }
}

std::size_t RunConfig::resolved_cqr_hidden(std::size_t vocab_size) const {
  if (cqr_hidden != 0) {
    return cqr_hidden;
  }
  const std::size_t automatic = 2 * vocab_size;
  return cqr_hidden_cap != 0 ? std::min(automatic, cqr_hidden_cap) : automatic;
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  if (name == "full") {
    return cfg;
  }
  if (name == "desk") {
    cfg.preset = "desk";
    cfg.embedding_dim = 32;
    cfg.hidden = 24;
    cfg.layers = 1;
    cfg.batch_size = 64;
    cfg.epochs = 15;
    cfg.cqr_hidden_cap = 512;
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected full or desk)");
}

json to_json(const RunConfig& c) {
  return {{"preset", c.preset},
          {"embedding_dim", c.embedding_dim},
          {"hidden", c.hidden},
          {"layers", c.layers},
          {"dropout", c.dropout},
          {"ctw_hidden", c.ctw_hidden},
          {"ctw_input_dropout", c.ctw_input_dropout},
          {"cqr_hidden", c.cqr_hidden},
          {"cqr_hidden_cap", c.cqr_hidden_cap},
          {"cqr_input_dropout", c.cqr_input_dropout},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"embeddings", c.embeddings}};
}

RunConfig run_config_from_json(const json& j) {
  try {
    RunConfig c = preset_config(j.value("preset", std::string("full")));
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") {
        continue;
      } else if (key == "embedding_dim") {
        c.embedding_dim = value.get<std::size_t>();
      } else if (key == "hidden") {
        c.hidden = value.get<std::size_t>();
      } else if (key == "layers") {
        c.layers = value.get<std::size_t>();
      } else if (key == "dropout") {
        c.dropout = value.get<double>();
      } else if (key == "ctw_hidden") {
        c.ctw_hidden = value.get<std::size_t>();
      } else if (key == "ctw_input_dropout") {
        c.ctw_input_dropout = value.get<double>();
      } else if (key == "cqr_hidden") {
        c.cqr_hidden = value.get<std::size_t>();
      } else if (key == "cqr_hidden_cap") {
        c.cqr_hidden_cap = value.get<std::size_t>();
      } else if (key == "cqr_input_dropout") {
        c.cqr_input_dropout = value.get<double>();
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "epochs") {
        c.epochs = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "embeddings") {
        c.embeddings = value.get<std::string>();
      } else {
        throw SchemaError("config: unknown key '" + key + "'");
      }
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace qintent
