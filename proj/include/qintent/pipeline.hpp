#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qintent/baselines.hpp"
#include "qintent/cqr.hpp"
#include "qintent/ctw.hpp"
#include "qintent/eval.hpp"
#include "qintent/synth.hpp"

namespace qintent {

/// Reads a pair file and tokenizes it against `vocab`.
std::vector<ReformulationPair> load_pairs(const std::string& path, VocabMode mode, Vocabulary& vocab);

/// Re-tokenizes already loaded pairs from their raw text.
std::vector<ReformulationPair> retokenize(std::span<const ReformulationPair> pairs, VocabMode mode, Vocabulary& vocab);

/// Training vocabulary: every term of the training pairs with the default
/// stop words marked.
Vocabulary training_vocabulary(std::span<const ReformulationPair> train, std::vector<ReformulationPair>* tokenized);

struct SyntheticExperiment {
  SynthOutput synth;
  std::vector<ReformulationPair> pairs;
  Vocabulary vocab;
  StopWords stopwords = StopWords::english_default();
  /// Tokenized against `vocab`; validation and test in frozen mode.
  std::vector<ReformulationPair> train;
  std::vector<ReformulationPair> validation;
  std::vector<ReformulationPair> test;
};

/// Synthesizes sessions, extracts pairs, splits them with `seed` and builds
/// the training vocabulary.
SyntheticExperiment prepare_synthetic(const SynthSpec& spec, std::uint64_t seed, const FilterConfig& filters = {},
                                      SplitFractions fractions = {});

WeightFn weight_fn(const CtwModel& model);
WeightFn weight_fn(const FtwModel& model);
WeightFn weight_fn(const TfidfModel& model);
WeightFn weight_fn(const VpcgModel& model);
RefineFn refine_fn(const CqrModel& model);
RefineFn refine_fn(const FqrModel& model);

}  // namespace qintent
