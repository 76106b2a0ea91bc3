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

/// Position-wise MLP: (d+2l) → hidden (ReLU) → 1 (sigmoid).
struct CtwHeadParams {
  Tensor w1;  // (d+2l) × hidden
  Tensor b1;  // hidden
  Tensor w2;  // hidden × 1
  Tensor b2;  // 1
};

template <typename Fn>
void visit_tensors(CtwHeadParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "w1", p.w1);
  fn(prefix + "b1", p.b1);
  fn(prefix + "w2", p.w2);
  fn(prefix + "b2", p.b2);
}

struct CtwParams {
  EncoderParams encoder;
  CtwHeadParams head;
  double input_dropout = 0.25;
};

template <typename Fn>
void visit_tensors(CtwParams& p, const std::string& prefix, Fn&& fn) {
  visit_tensors(p.encoder, prefix + "encoder.", fn);
  visit_tensors(p.head, prefix + "head.", fn);
}

/// Encoder and head weights uniform in ±1/sqrt(fan_in) for the head.
CtwParams init_ctw_params(std::size_t vocab_size, const RunConfig& cfg, Rng& rng);

/// [r_{v_t}, h^f_t − h^f_{t−1}, h^b_t − h^b_{t+1}] for 1-based position t.
std::vector<double> ctw_features(const EncodedQuery& enc, const EncoderParams& encoder, std::size_t t);

/// One weight in (0, 1) per query position.
using TermWeights = std::vector<double>;

TermWeights predict_weights(const Query& q, const CtwParams& params);

struct TermWeightExample {
  Query q;
  std::vector<double> labels;
};

/// y_t = 1 iff the t-th term of q occurs in R(q). Terms are compared as
/// strings so that out-of-vocabulary tokens keep their identity.
TermWeightExample make_weight_example(const ReformulationPair& pair);

/// Summed binary cross entropy over every position of every example,
/// accumulated in extended precision.
/// Gradients are accumulated into `grads` when it is non-null.
long double ctw_loss(std::span<const TermWeightExample> batch, const CtwParams& params, Mode mode, Rng& rng,
                     CtwParams* grads);

/// A trained model with the vocabulary and configuration it was trained
/// with.
struct CtwModel {
  RunConfig config;
  Vocabulary vocab;
  StopWords stopwords = StopWords::english_default();
  CtwParams params;
  TrainingTrace trace;

  /// Tokenizes against the frozen vocabulary and predicts weights.
  TermWeights weigh(std::string_view raw) const;
};

/// Trains on `train` and selects the epoch with the best validation AP@nnz.
/// Pairs must be tokenized against `vocab`.
CtwModel train_ctw(std::span<const ReformulationPair> train, std::span<const ReformulationPair> validation,
                   const Vocabulary& vocab, const StopWords& stopwords, const RunConfig& cfg,
                   const ProgressFn& progress = {});

/// AP@nnz of the weight ranking over `pairs`.
double weighting_ap_nnz(const CtwParams& params, std::span<const ReformulationPair> pairs, const StopWords& stopwords);

nlohmann::json ctw_to_json(const CtwModel& model);
CtwModel ctw_from_json(const nlohmann::json& j);

}  // namespace qintent
