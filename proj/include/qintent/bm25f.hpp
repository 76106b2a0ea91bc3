#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace qintent {

struct CatalogDocument {
  std::string product;
  std::string title;
  std::string description;
};

inline constexpr std::size_t kFieldCount = 2;
inline constexpr std::array<std::string_view, kFieldCount> kFieldNames{"title", "description"};

struct FieldParams {
  double b = 0.75;
  double weight = 1.0;
};

struct Bm25fParams {
  double k1 = 1.2;
  std::array<FieldParams, kFieldCount> fields{FieldParams{0.75, 2.0}, FieldParams{0.75, 1.0}};
};

struct Posting {
  std::uint32_t doc = 0;
  std::array<std::uint32_t, kFieldCount> tf{};
  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Field-weighted BM25 over a product catalog. Immutable after build.
class Bm25fIndex {
public:
  /// Rejects an empty catalog, duplicate product ids and documents whose
  /// fields are all empty.
  static Bm25fIndex build(std::span<const CatalogDocument> docs, Bm25fParams params = {});

  std::size_t document_count() const { return products_.size(); }
  const std::string& product(std::size_t doc) const { return products_.at(doc); }
  std::optional<std::size_t> find_product(const std::string& product) const;
  const Bm25fParams& params() const { return params_; }

  std::size_t df(std::string_view term) const;
  /// ln((N - df + 0.5) / (df + 0.5) + 1)
  double idf(std::string_view term) const;
  double average_length(std::size_t field) const { return avg_length_.at(field); }
  std::uint32_t field_length(std::size_t doc, std::size_t field) const { return lengths_.at(doc).at(field); }
  const std::vector<Posting>* postings(std::string_view term) const;
  const std::map<std::string, std::vector<Posting>, std::less<>>& all_postings() const { return postings_; }

  /// idf · wtf / (k1 + wtf) with wtf = Σ_f weight_f · tf_f / (1 - b_f + b_f · len_f / avglen_f).
  /// Zero when the term does not occur in the document.
  double term_score(std::string_view term, std::size_t doc) const;

  /// Score contribution of one posting of a term whose document frequency is `df`.
  double score_posting(const Posting& p, std::size_t df) const;

  nlohmann::json to_json() const;
  static Bm25fIndex from_json(const nlohmann::json& j);

  friend bool operator==(const Bm25fIndex& a, const Bm25fIndex& b) {
    return a.products_ == b.products_ && a.lengths_ == b.lengths_ && a.postings_ == b.postings_ &&
           a.avg_length_ == b.avg_length_;
  }

private:
  void finalize();

  Bm25fParams params_;
  std::vector<std::string> products_;
  std::vector<std::array<std::uint32_t, kFieldCount>> lengths_;
  std::array<double, kFieldCount> avg_length_{};
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  std::unordered_map<std::string, std::size_t> product_index_;
};

struct RankedProduct {
  std::string product;
  double score = 0.0;
  friend bool operator==(const RankedProduct&, const RankedProduct&) = default;
};

/// score(doc) = Σ_t w_t · term_score(q_t, doc), w_t = 1 without weights.
/// Only documents matching at least one query term are ranked; ties go to
/// the ascending product id. Returns at most `k` entries. Equal positive
/// weights give exactly the unweighted order.
std::vector<RankedProduct> rank(std::span<const std::string> query_terms, const Bm25fIndex& index,
                                std::optional<std::span<const double>> weights, std::size_t k);

/// {"product": str, "title": str, "description": str}
std::vector<CatalogDocument> read_catalog(const std::string& path);
std::vector<CatalogDocument> read_catalog(std::istream& in);
void write_catalog(std::ostream& out, std::span<const CatalogDocument> docs);

}  // namespace qintent
