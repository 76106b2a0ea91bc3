#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qintent/config.hpp"
#include "qintent/corpus.hpp"
#include "qintent/encoder.hpp"
#include "qintent/training.hpp"

namespace qintent {

/// Intent representation (2l) → hidden (ReLU) → |V| (sigmoid).
struct CqrHeadParams {
  Tensor w1;  // 2l × hidden
  Tensor b1;  // hidden
  Tensor w2;  // hidden × |V|
  Tensor b2;  // |V|
};

template <typename Fn>
void visit_tensors(CqrHeadParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "w1", p.w1);
  fn(prefix + "b1", p.b1);
  fn(prefix + "w2", p.w2);
  fn(prefix + "b2", p.b2);
}

struct CqrParams {
  EncoderParams encoder;
  CqrHeadParams head;
  double input_dropout = 0.25;
};

template <typename Fn>
void visit_tensors(CqrParams& p, const std::string& prefix, Fn&& fn) {
  visit_tensors(p.encoder, prefix + "encoder.", fn);
  visit_tensors(p.head, prefix + "head.", fn);
}

CqrParams init_cqr_params(std::size_t vocab_size, const RunConfig& cfg, Rng& rng);

/// Sigmoid scores for every vocabulary id, UNK included (callers skip it).
std::vector<double> refinement_scores(const Query& q, const CqrParams& params);

struct RefinementExample {
  Query q;
  /// Sorted distinct ids of R(q)'s in-vocabulary terms, UNK excluded.
  std::vector<TermId> positives;
};

RefinementExample make_refinement_example(const ReformulationPair& pair, const Vocabulary& vocab);

/// Summed binary cross entropy over labels 1..|V|−1 of every example,
/// accumulated in extended precision.
long double cqr_loss(std::span<const RefinementExample> batch, const CqrParams& params, Mode mode, Rng& rng,
                     CqrParams* grads);

struct ScoredTerm {
  TermId id = 0;
  std::string term;
  double score = 0.0;
};

/// Every non-UNK term ordered by descending score, ties by ascending id.
std::vector<ScoredTerm> rank_refinements(std::span<const double> scores, const Vocabulary& vocab);

struct CqrModel {
  RunConfig config;
  Vocabulary vocab;
  StopWords stopwords = StopWords::english_default();
  CqrParams params;
  TrainingTrace trace;

  /// Top-k terms for a raw query. Rejects k > |V|−1. With `skip_stopwords`
  /// stop words are removed before the top k are taken.
  std::vector<ScoredTerm> refine(std::string_view raw, std::size_t k, bool skip_stopwords = false) const;
};

std::vector<ScoredTerm> predict_refinements(const Query& q, const CqrParams& params, const Vocabulary& vocab,
                                            std::size_t k, bool skip_stopwords = false);

CqrModel train_cqr(std::span<const ReformulationPair> train, std::span<const ReformulationPair> validation,
                   const Vocabulary& vocab, const StopWords& stopwords, const RunConfig& cfg,
                   const ProgressFn& progress = {});

/// AP@nnz of the refinement ranking over `pairs`.
double refinement_ap_nnz(const CqrParams& params, const Vocabulary& vocab, std::span<const ReformulationPair> pairs,
                         const StopWords& stopwords);

nlohmann::json cqr_to_json(const CqrModel& model);
CqrModel cqr_from_json(const nlohmann::json& j);

}  // namespace qintent
