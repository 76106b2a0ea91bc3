#include "qintent/model_io.hpp"

#include <fstream>

#include "qintent/errors.hpp"

namespace qintent {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  if (t.rank() == 1) {
    return json(std::vector<double>(t.values().begin(), t.values().end()));
  }
  if (t.rank() != 2) {
    throw std::invalid_argument("tensor_to_json: only rank 1 and 2 tensors are persisted");
  }
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Tensor tensor_from_json(const json& j) {
  if (!j.is_array()) {
    throw SchemaError("tensor must be an array");
  }
  if (j.empty() || !j.front().is_array()) {
    return Tensor::vector(j.get<std::vector<double>>());
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw SchemaError("ragged tensor rows");
    }
    for (const auto& v : row) {
      data.push_back(v.get<double>());
    }
  }
  return Tensor::matrix(rows, cols, std::move(data));
}

json vocabulary_to_json(const Vocabulary& vocab, const StopWords& stopwords) {
  return {{"terms", vocab.terms()}, {"frequencies", vocab.frequencies()}, {"stopwords", stopwords.sorted()}};
}

StopWords stopwords_from_json(const json& j) {
  return StopWords(j.at("stopwords").get<std::vector<std::string>>());
}

Vocabulary vocabulary_from_json(const json& j) {
  try {
    return Vocabulary::from_parts(j.at("terms").get<std::vector<std::string>>(),
                                  j.at("frequencies").get<std::vector<std::uint64_t>>(), stopwords_from_json(j));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed vocabulary: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("malformed vocabulary: ") + e.what());
  }
}

json model_envelope(const std::string& model_type) {
  return {{"format_version", kModelFormatVersion}, {"model_type", model_type}};
}

void check_envelope(const json& j, const std::string& expected_type) {
  if (!j.is_object() || !j.contains("format_version") || !j.contains("model_type")) {
    throw SchemaError("model file lacks format_version or model_type");
  }
  if (!j.at("format_version").is_number_integer() || j.at("format_version").get<int>() != kModelFormatVersion) {
    throw VersionMismatch("model format_version " + j.at("format_version").dump() + " is not supported (expected " +
                          std::to_string(kModelFormatVersion) + ")");
  }
  const auto type = j.at("model_type").get<std::string>();
  if (type != expected_type) {
    throw SchemaError("model_type '" + type + "' where '" + expected_type + "' was expected");
  }
}

json trace_to_json(const TrainingTrace& trace) {
  return {{"epoch_loss", trace.epoch_loss},
          {"validation_ap_nnz", trace.validation_ap},
          {"best_epoch", trace.best_epoch}};
}

TrainingTrace trace_from_json(const json& j) {
  TrainingTrace t;
  if (j.is_null()) {
    return t;
  }
  t.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  t.validation_ap = j.at("validation_ap_nnz").get<std::vector<double>>();
  t.best_epoch = j.at("best_epoch").get<std::size_t>();
  return t;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("write failed for " + path);
  }
}

}  // namespace qintent
