#include "qintent/bm25f.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qintent/errors.hpp"
#include "qintent/vocabulary.hpp"

namespace qintent {

using nlohmann::json;

namespace {

constexpr int kIndexFormatVersion = 1;

}  // namespace

Bm25fIndex Bm25fIndex::build(std::span<const CatalogDocument> docs, Bm25fParams params) {
  if (docs.empty()) {
    throw std::invalid_argument("index_build: empty catalog");
  }
  Bm25fIndex index;
  index.params_ = params;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (!index.product_index_.emplace(doc.product, d).second) {
      throw std::invalid_argument("index_build: duplicate product id '" + doc.product + "'");
    }
    index.products_.push_back(doc.product);

    const std::array<std::vector<std::string>, kFieldCount> fields{tokenize_text(doc.title),
                                                                   tokenize_text(doc.description)};
    if (fields[0].empty() && fields[1].empty()) {
      throw std::invalid_argument("index_build: product '" + doc.product + "' has no indexable text");
    }
    std::map<std::string, std::array<std::uint32_t, kFieldCount>> counts;
    std::array<std::uint32_t, kFieldCount> lengths{};
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      lengths[f] = static_cast<std::uint32_t>(fields[f].size());
      for (const auto& term : fields[f]) {
        ++counts[term][f];
      }
    }
    index.lengths_.push_back(lengths);
    for (const auto& [term, tf] : counts) {
      index.postings_[term].push_back({static_cast<std::uint32_t>(d), tf});
    }
  }
  index.finalize();
  return index;
}

void Bm25fIndex::finalize() {
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    double total = 0.0;
    for (const auto& len : lengths_) {
      total += len[f];
    }
    const double avg = total / static_cast<double>(lengths_.size());
    // A field empty across the whole catalog never contributes tf; keep the
    // normalizer well defined.
    avg_length_[f] = avg > 0.0 ? avg : 1.0;
  }
  product_index_.clear();
  for (std::size_t d = 0; d < products_.size(); ++d) {
    product_index_.emplace(products_[d], d);
  }
}

std::optional<std::size_t> Bm25fIndex::find_product(const std::string& product) const {
  if (auto it = product_index_.find(product); it != product_index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

const std::vector<Posting>* Bm25fIndex::postings(std::string_view term) const {
  if (auto it = postings_.find(term); it != postings_.end()) {
    return &it->second;
  }
  return nullptr;
}

std::size_t Bm25fIndex::df(std::string_view term) const {
  const auto* p = postings(term);
  return p ? p->size() : 0;
}

namespace {

double idf_value(std::size_t n, std::size_t df) {
  const auto N = static_cast<double>(n);
  const auto d = static_cast<double>(df);
  return std::log((N - d + 0.5) / (d + 0.5) + 1.0);
}

}  // namespace

double Bm25fIndex::idf(std::string_view term) const { return idf_value(products_.size(), df(term)); }

double Bm25fIndex::score_posting(const Posting& p, std::size_t df) const {
  double wtf = 0.0;
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    if (p.tf[f] == 0) {
      continue;
    }
    const auto& fp = params_.fields[f];
    const double norm = 1.0 - fp.b + fp.b * lengths_[p.doc][f] / avg_length_[f];
    wtf += fp.weight * p.tf[f] / norm;
  }
  return idf_value(products_.size(), df) * wtf / (params_.k1 + wtf);
}

double Bm25fIndex::term_score(std::string_view term, std::size_t doc) const {
  const auto* list = postings(term);
  if (!list) {
    return 0.0;
  }
  auto it = std::lower_bound(list->begin(), list->end(), doc,
                             [](const Posting& p, std::size_t d) { return p.doc < d; });
  if (it == list->end() || it->doc != doc) {
    return 0.0;
  }
  return score_posting(*it, list->size());
}

json Bm25fIndex::to_json() const {
  json j;
  j["format_version"] = kIndexFormatVersion;
  j["model_type"] = "bm25f_index";
  json fields = json::array();
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    fields.push_back({{"name", kFieldNames[f]}, {"b", params_.fields[f].b}, {"weight", params_.fields[f].weight}});
  }
  j["params"] = {{"k1", params_.k1}, {"fields", fields}};
  json docs = json::array();
  for (std::size_t d = 0; d < products_.size(); ++d) {
    docs.push_back({{"product", products_[d]}, {"lengths", lengths_[d]}});
  }
  j["documents"] = std::move(docs);
  json postings = json::object();
  for (const auto& [term, list] : postings_) {
    json entries = json::array();
    for (const auto& p : list) {
      entries.push_back({p.doc, p.tf[0], p.tf[1]});
    }
    postings[term] = std::move(entries);
  }
  j["postings"] = std::move(postings);
  return j;
}

Bm25fIndex Bm25fIndex::from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kIndexFormatVersion) {
      throw VersionMismatch("index format_version " + j.at("format_version").dump() + " is not supported");
    }
    if (j.at("model_type").get<std::string>() != "bm25f_index") {
      throw SchemaError("not a bm25f index file");
    }
    Bm25fIndex index;
    index.params_.k1 = j.at("params").at("k1").get<double>();
    const auto& fields = j.at("params").at("fields");
    if (fields.size() != kFieldCount) {
      throw SchemaError("index must declare exactly " + std::to_string(kFieldCount) + " fields");
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      index.params_.fields[f].b = fields[f].at("b").get<double>();
      index.params_.fields[f].weight = fields[f].at("weight").get<double>();
    }
    for (const auto& d : j.at("documents")) {
      index.products_.push_back(d.at("product").get<std::string>());
      index.lengths_.push_back(d.at("lengths").get<std::array<std::uint32_t, kFieldCount>>());
    }
    for (const auto& [term, entries] : j.at("postings").items()) {
      auto& list = index.postings_[term];
      for (const auto& e : entries) {
        Posting p;
        p.doc = e.at(0).get<std::uint32_t>();
        p.tf = {e.at(1).get<std::uint32_t>(), e.at(2).get<std::uint32_t>()};
        if (p.doc >= index.products_.size()) {
          throw SchemaError("posting for '" + term + "' references unknown document");
        }
        list.push_back(p);
      }
    }
    if (index.products_.empty()) {
      throw SchemaError("index has no documents");
    }
    index.finalize();
    return index;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed index: ") + e.what());
  }
}

std::vector<RankedProduct> rank(std::span<const std::string> query_terms, const Bm25fIndex& index,
                                std::optional<std::span<const double>> weights, std::size_t k) {
  if (query_terms.empty()) {
    throw std::invalid_argument("rank: empty query");
  }
  if (weights && weights->size() != query_terms.size()) {
    throw std::invalid_argument("rank: " + std::to_string(weights->size()) + " weights for " +
                                std::to_string(query_terms.size()) + " query terms");
  }
  // A common positive weight is applied after sorting so the order matches
  // the unweighted ranking exactly.
  double common = 1.0;
  if (weights && (*weights)[0] > 0.0 &&
      std::all_of(weights->begin(), weights->end(), [&](double w) { return w == (*weights)[0]; })) {
    common = (*weights)[0];
    weights.reset();
  }
  std::vector<double> scores(index.document_count(), 0.0);
  std::vector<std::uint8_t> matched(index.document_count(), 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t t = 0; t < query_terms.size(); ++t) {
    const double w = weights ? (*weights)[t] : 1.0;
    const auto* list = index.postings(query_terms[t]);
    if (!list) {
      continue;
    }
    for (const auto& p : *list) {
      if (!matched[p.doc]) {
        matched[p.doc] = 1;
        touched.push_back(p.doc);
      }
      scores[p.doc] += w * index.score_posting(p, list->size());
    }
  }
  std::vector<RankedProduct> ranked;
  ranked.reserve(touched.size());
  for (auto d : touched) {
    ranked.push_back({index.product(d), scores[d]});
  }
  auto better = [](const RankedProduct& a, const RankedProduct& b) {
    return a.score != b.score ? a.score > b.score : a.product < b.product;
  };
  if (ranked.size() > k) {
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), better);
    ranked.resize(k);
  } else {
    std::sort(ranked.begin(), ranked.end(), better);
  }
  if (common != 1.0) {
    for (auto& r : ranked) {
      r.score *= common;
    }
  }
  return ranked;
}

std::vector<CatalogDocument> read_catalog(std::istream& in) {
  std::vector<CatalogDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
      continue;
    }
    try {
      const json j = json::parse(line);
      CatalogDocument d;
      d.product = j.at("product").get<std::string>();
      d.title = j.value("title", std::string{});
      d.description = j.value("description", std::string{});
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw SchemaError("catalog line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<CatalogDocument> read_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open catalog " + path);
  }
  return read_catalog(in);
}

void write_catalog(std::ostream& out, std::span<const CatalogDocument> docs) {
  for (const auto& d : docs) {
    out << json{{"product", d.product}, {"title", d.title}, {"description", d.description}}.dump() << '\n';
  }
}

}  // namespace qintent
