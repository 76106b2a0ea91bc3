#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace qintent {

/// Hyperparameters shared by the CTW and CQR trainers.
struct RunConfig {
  std::string preset = "full";
  std::size_t embedding_dim = 300;
  std::size_t hidden = 256;
  std::size_t layers = 2;
  double dropout = 0.25;
  std::size_t ctw_hidden = 10;
  double ctw_input_dropout = 0.25;
  /// 0 selects 2·|V|; a nonzero cap bounds the automatic size.
  std::size_t cqr_hidden = 0;
  std::size_t cqr_hidden_cap = 0;
  double cqr_input_dropout = 0.25;
  double learning_rate = 0.001;
  std::size_t batch_size = 512;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::string embeddings;

  /// Rejects non-positive sizes and out-of-range rates.
  void validate() const;

  std::size_t resolved_cqr_hidden(std::size_t vocab_size) const;
};

/// "full" or "desk". Unknown names throw std::invalid_argument.
RunConfig preset_config(const std::string& name);

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep the values of the preset named by the "preset" key.
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace qintent
