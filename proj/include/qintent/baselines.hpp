#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qintent/corpus.hpp"
#include "qintent/rng.hpp"

namespace qintent {

// --- FTW --------------------------------------------------------------------

struct RetentionCount {
  std::uint64_t retained = 0;
  std::uint64_t occurred = 0;
  friend bool operator==(const RetentionCount&, const RetentionCount&) = default;
};

/// Context-free term weights: the fraction of training pairs containing a
/// term in q whose reformulation also contains it.
struct FtwModel {
  static constexpr double kUnseenWeight = 0.5;

  std::map<std::string, RetentionCount, std::less<>> counts;

  double weight(std::string_view term) const;
  std::vector<double> weigh(std::span<const std::string> terms) const;
};

FtwModel ftw_fit(std::span<const ReformulationPair> pairs);

// --- FQR --------------------------------------------------------------------

struct RefinementScore {
  std::string term;
  double score = 0.0;
};

/// Context-free refinement: s(v) = Σ over distinct q terms u of
/// #(u ∈ q' ∧ v ∈ R(q')) / #(u ∈ q').
struct FqrModel {
  std::map<std::string, std::uint64_t, std::less<>> occurrences;
  std::map<std::string, std::map<std::string, std::uint64_t>, std::less<>> cooccurrence;

  /// Every term with a positive score, by descending score then term.
  std::vector<RefinementScore> scores(std::span<const std::string> query_terms) const;
};

FqrModel fqr_fit(std::span<const ReformulationPair> pairs);

// --- TF-IDF -----------------------------------------------------------------

/// Documents are the training queries.
/// weight = tf · (ln((N + 1) / (df + 1)) + 1); the +1 terms keep unseen
/// terms finite and give terms present everywhere weight tf.
struct TfidfModel {
  std::uint64_t documents = 0;
  std::map<std::string, std::uint64_t, std::less<>> df;

  double idf(std::string_view term) const;
  std::vector<double> weigh(std::span<const std::string> terms) const;
};

TfidfModel tfidf_fit(std::span<const ReformulationPair> pairs);

// --- VPCG & VG ----------------------------------------------------------------

struct ClickEdge {
  std::string query;
  std::string product;
  double clicks = 1.0;
};

/// One edge (normalized R(q), product) per pair with an add-to-cart product;
/// repeated edges accumulate clicks.
std::vector<ClickEdge> click_graph(std::span<const ReformulationPair> pairs);

struct VpcgConfig {
  std::size_t dim = 50;
  std::size_t iterations = 50;
  /// Propagation stops early once no vector coordinate moves more than this.
  double tolerance = 1e-12;
  double learning_rate = 0.001;
  std::size_t sgd_epochs = 200;
  std::uint64_t seed = 1;
};

using Vector = std::vector<double>;

struct VpcgModel {
  std::size_t dim = 0;
  std::size_t sweeps = 0;
  std::map<std::string, Vector, std::less<>> query_vectors;
  std::map<std::string, Vector, std::less<>> product_vectors;
  std::map<std::string, Vector, std::less<>> ngram_vectors;
  std::map<std::string, double, std::less<>> ngram_weights;

  /// Regression weight of a unigram; 0 when unseen.
  double term_weight(std::string_view term) const;
  std::vector<double> weigh(std::span<const std::string> terms) const;
  /// Σ_g w_g v_g over the unigrams and bigrams of `terms`; unknown n-grams
  /// contribute nothing.
  Vector generate(std::span<const std::string> terms) const;
  /// Dot product of the L2-normalized generated query vector and the product
  /// vector; 0 for unknown products or an all-zero query vector.
  double score(std::span<const std::string> terms, const std::string& product) const;
};

/// Unigrams followed by bigrams joined with a single space.
std::vector<std::string> query_ngrams(std::span<const std::string> terms);

/// One alternating sweep: products from queries, then queries from
/// products, each a click-weighted sum followed by L2 normalization.
void vpcg_sweep(std::span<const ClickEdge> edges, std::map<std::string, Vector, std::less<>>& queries,
                std::map<std::string, Vector, std::less<>>& products);

struct RegressionSample {
  Vector target;
  std::vector<std::string> grams;
};

/// SGD on Σ ||target − Σ_g w_g v_g||² over `samples`, one shuffled pass per
/// epoch. Every gram must have a vector and a weight.
void regress_ngram_weights(std::span<const RegressionSample> samples,
                           const std::map<std::string, Vector, std::less<>>& ngram_vectors,
                           std::map<std::string, double, std::less<>>& weights, double learning_rate,
                           std::size_t epochs, Rng& rng);

/// Edges with an empty endpoint or a non-positive click count are dropped
/// and counted in `dropped`.
VpcgModel vpcg_fit(std::span<const ClickEdge> edges, const VpcgConfig& cfg, std::size_t* dropped = nullptr);

// --- persistence ------------------------------------------------------------

nlohmann::json ftw_to_json(const FtwModel& m);
FtwModel ftw_from_json(const nlohmann::json& j);
nlohmann::json fqr_to_json(const FqrModel& m);
FqrModel fqr_from_json(const nlohmann::json& j);
nlohmann::json tfidf_to_json(const TfidfModel& m);
TfidfModel tfidf_from_json(const nlohmann::json& j);
nlohmann::json vpcg_to_json(const VpcgModel& m);
VpcgModel vpcg_from_json(const nlohmann::json& j);

}  // namespace qintent
