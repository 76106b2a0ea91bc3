#pragma once

#include <string>

#include <json.hpp>

#include "qintent/errors.hpp"
#include "qintent/tensor.hpp"
#include "qintent/training.hpp"
#include "qintent/vocabulary.hpp"

namespace qintent {

inline constexpr int kModelFormatVersion = 1;

/// Nested arrays: a rank-1 tensor is a flat array, a rank-2 tensor an array
/// of rows.
nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);

/// {"terms": [...], "frequencies": [...], "stopwords": [...]}
nlohmann::json vocabulary_to_json(const Vocabulary& vocab, const StopWords& stopwords);
Vocabulary vocabulary_from_json(const nlohmann::json& j);
StopWords stopwords_from_json(const nlohmann::json& j);

/// {"format_version": 1, "model_type": type}
nlohmann::json model_envelope(const std::string& model_type);

/// Throws VersionMismatch for an unsupported format_version and SchemaError
/// when model_type differs from `expected_type`.
void check_envelope(const nlohmann::json& j, const std::string& expected_type);

/// {"epoch_loss": [...], "validation_ap_nnz": [...], "best_epoch": n}
nlohmann::json trace_to_json(const TrainingTrace& trace);
TrainingTrace trace_from_json(const nlohmann::json& j);

/// Overwrites every tensor of `params` with the stored tensor of the same
/// name, which must have the same shape. Extra or missing names are schema
/// errors.
template <typename Params>
void load_named_tensors(const nlohmann::json& tensors, Params& params) {
  std::size_t seen = 0;
  visit_tensors(params, "", [&](const std::string& name, Tensor& t) {
    if (!tensors.contains(name)) {
      throw SchemaError("model file lacks tensor '" + name + "'");
    }
    Tensor loaded = tensor_from_json(tensors.at(name));
    if (loaded.shape() != t.shape()) {
      throw SchemaError("tensor '" + name + "' has shape " + loaded.shape_string() + ", expected " +
                        t.shape_string());
    }
    t = std::move(loaded);
    ++seen;
  });
  if (seen != tensors.size()) {
    throw SchemaError("model file has unexpected tensors");
  }
}

template <typename Params>
nlohmann::json named_tensors_to_json(Params params) {
  nlohmann::json tensors = nlohmann::json::object();
  visit_tensors(params, "", [&](const std::string& name, Tensor& t) { tensors[name] = tensor_to_json(t); });
  return tensors;
}

nlohmann::json read_json_file(const std::string& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace qintent
