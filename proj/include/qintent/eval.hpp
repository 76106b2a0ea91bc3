#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qintent/bm25f.hpp"
#include "qintent/corpus.hpp"
#include "qintent/metrics.hpp"

namespace qintent {

/// Weights for the terms of pair.q in order, one per position.
using WeightFn = std::function<std::vector<double>(const ReformulationPair&)>;
/// Refinement terms for pair.q, best first.
using RefineFn = std::function<std::vector<std::string>(const ReformulationPair&)>;

struct EvalRow {
  std::string q;
  std::string rq;
  bool skipped = false;
  PrecisionRow precision;
};

struct RankingRow {
  std::string q;
  std::string product;
  double rr_unboosted = 0.0;
  double rr_boosted = 0.0;
};

struct ModelEval {
  std::string model;
  std::vector<EvalRow> rows;
  PrecisionSummary summary;
  std::vector<RankingRow> ranking;
  std::size_t ranking_skipped = 0;
  double mrr_bm25f = 0.0;
  double mrr_boost = 0.0;
  double mrr_ratio = 0.0;
};

struct SignificanceRecord {
  std::string name;
  TTestResult result;
  double alpha = 0.05;
  bool passed() const { return result.p < alpha; }
};

struct EvalReport {
  std::string task;  // "weighting", "refinement" or "ranking"
  std::vector<ModelEval> models;
  std::vector<SignificanceRecord> tests;

  nlohmann::json to_json() const;
  /// Aligned plain-text table of the aggregates and tests.
  std::string table() const;
};

/// Truth per pair: the terms of q retained in R(q). Predictions: distinct q
/// terms by descending weight.
ModelEval evaluate_weighting(std::span<const ReformulationPair> pairs, const WeightFn& weigh,
                             const StopWords& stopwords, std::string model);

/// Truth per pair: the distinct terms of R(q).
ModelEval evaluate_refinement(std::span<const ReformulationPair> pairs, const RefineFn& refine,
                              const StopWords& stopwords, std::string model);

/// Reciprocal rank of the pair's product in the unboosted and the boosted
/// BM25F ranking of q, to `depth`. Pairs without a product in the index are
/// skipped. Rejects a zero unboosted MRR.
ModelEval evaluate_ranking(std::span<const ReformulationPair> pairs, const Bm25fIndex& index, const WeightFn& weigh,
                           std::string model, std::size_t depth = 100);

/// Ground-truth retention labels as weights: 1 when the q term occurs in
/// R(q), else 0.
std::vector<double> oracle_weights(const ReformulationPair& pair);

/// Paired t-tests. Precision tasks compare P@nnz of every model against the
/// first; ranking compares boosted against unboosted reciprocal ranks for
/// each model.
void add_significance_tests(EvalReport& report, double alpha = 0.05);

}  // namespace qintent
