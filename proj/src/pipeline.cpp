#include "qintent/pipeline.hpp"

namespace qintent {

namespace {

std::vector<RawPair> raw_pairs(std::span<const ReformulationPair> pairs) {
  std::vector<RawPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.q.raw, p.rq.raw, p.product});
  }
  return out;
}

}  // namespace

std::vector<ReformulationPair> load_pairs(const std::string& path, VocabMode mode, Vocabulary& vocab) {
  return tokenize_pairs(read_pairs(path), mode, vocab);
}

std::vector<ReformulationPair> retokenize(std::span<const ReformulationPair> pairs, VocabMode mode, Vocabulary& vocab) {
  return tokenize_pairs(raw_pairs(pairs), mode, vocab);
}

Vocabulary training_vocabulary(std::span<const ReformulationPair> train, std::vector<ReformulationPair>* tokenized) {
  Vocabulary vocab;
  auto pairs = retokenize(train, VocabMode::build, vocab);
  vocab.apply_stopwords(StopWords::english_default());
  if (tokenized) {
    *tokenized = std::move(pairs);
  }
  return vocab;
}

SyntheticExperiment prepare_synthetic(const SynthSpec& spec, std::uint64_t seed, const FilterConfig& filters,
                                      SplitFractions fractions) {
  SyntheticExperiment x;
  x.synth = synthesize_sessions(spec, seed);
  x.pairs = extract_pairs(x.synth.events, x.synth.stats, filters, x.synth.vocab);
  const auto split = split_dataset(x.pairs, seed, fractions);
  x.vocab = training_vocabulary(split.train, &x.train);
  x.validation = retokenize(split.validation, VocabMode::frozen, x.vocab);
  x.test = retokenize(split.test, VocabMode::frozen, x.vocab);
  return x;
}

WeightFn weight_fn(const CtwModel& model) {
  return [&model](const ReformulationPair& p) { return model.weigh(p.q.raw); };
}

WeightFn weight_fn(const FtwModel& model) {
  return [&model](const ReformulationPair& p) { return model.weigh(tokenize_text(p.q.raw)); };
}

WeightFn weight_fn(const TfidfModel& model) {
  return [&model](const ReformulationPair& p) { return model.weigh(tokenize_text(p.q.raw)); };
}

WeightFn weight_fn(const VpcgModel& model) {
  return [&model](const ReformulationPair& p) { return model.weigh(tokenize_text(p.q.raw)); };
}

RefineFn refine_fn(const CqrModel& model) {
  return [&model](const ReformulationPair& p) {
    std::vector<std::string> out;
    const auto q = tokenize_frozen(p.q.raw, model.vocab);
    for (auto& s : rank_refinements(refinement_scores(q, model.params), model.vocab)) {
      out.push_back(std::move(s.term));
    }
    return out;
  };
}

RefineFn refine_fn(const FqrModel& model) {
  return [&model](const ReformulationPair& p) {
    std::vector<std::string> out;
    for (auto& s : model.scores(tokenize_text(p.q.raw))) {
      out.push_back(std::move(s.term));
    }
    return out;
  };
}

}  // namespace qintent
