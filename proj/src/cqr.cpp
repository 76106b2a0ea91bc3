#include "qintent/cqr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qintent/bce.hpp"
#include "qintent/metrics.hpp"
#include "qintent/model_io.hpp"

namespace qintent {

using nlohmann::json;

CqrParams init_cqr_params(std::size_t vocab_size, const RunConfig& cfg, Rng& rng) {
  cfg.validate();
  if (vocab_size < 2) {
    throw std::invalid_argument("init_cqr_params: vocabulary needs at least one term besides UNK");
  }
  CqrParams p;
  p.encoder = init_encoder({vocab_size, cfg.embedding_dim, cfg.hidden, cfg.layers, cfg.dropout}, rng);
  p.input_dropout = cfg.cqr_input_dropout;
  const std::size_t in = 2 * cfg.hidden;
  const std::size_t hidden = cfg.resolved_cqr_hidden(vocab_size);
  p.head.w1 = Tensor({in, hidden});
  p.head.b1 = Tensor({hidden});
  p.head.w2 = Tensor({hidden, vocab_size});
  p.head.b2 = Tensor({vocab_size});
  const double b_in = 1.0 / std::sqrt(static_cast<double>(in));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto* t : {&p.head.w1, &p.head.b1}) {
    for (auto& v : t->values()) {
      v = rng.uniform(-b_in, b_in);
    }
  }
  for (auto* t : {&p.head.w2, &p.head.b2}) {
    for (auto& v : t->values()) {
      v = rng.uniform(-b_hidden, b_hidden);
    }
  }
  return p;
}

namespace {

struct HeadForward {
  std::vector<double> x;
  std::vector<double> a1;
  std::vector<double> h1;
  std::vector<double> logits;
};

HeadForward head_forward(const CqrHeadParams& head, std::vector<double> x) {
  HeadForward f;
  f.x = std::move(x);
  f.a1.assign(head.b1.values().begin(), head.b1.values().end());
  kernels::vecmat_acc(f.x, head.w1, f.a1);
  f.h1.resize(f.a1.size());
  for (std::size_t j = 0; j < f.a1.size(); ++j) {
    f.h1[j] = f.a1[j] > 0.0 ? f.a1[j] : 0.0;
  }
  f.logits.assign(head.b2.values().begin(), head.b2.values().end());
  kernels::vecmat_acc(f.h1, head.w2, f.logits);
  return f;
}

}  // namespace

std::vector<double> refinement_scores(const Query& q, const CqrParams& params) {
  Rng unused(0);
  const auto enc = encode(q, params.encoder, Mode::eval, unused);
  auto f = head_forward(params.head, intent_representation(enc));
  for (auto& v : f.logits) {
    v = sigmoid(v);
  }
  return f.logits;
}

RefinementExample make_refinement_example(const ReformulationPair& pair, const Vocabulary& vocab) {
  RefinementExample ex;
  ex.q = pair.q;
  std::set<TermId> ids;
  for (const auto& t : tokenize_text(pair.rq.raw)) {
    if (auto id = vocab.find(t); id && *id != Vocabulary::kUnk) {
      ids.insert(*id);
    }
  }
  ex.positives.assign(ids.begin(), ids.end());
  return ex;
}

long double cqr_loss(std::span<const RefinementExample> batch, const CqrParams& params, Mode mode, Rng& rng,
                     CqrParams* grads) {
  const auto& head = params.head;
  const std::size_t l = params.encoder.hidden_size();
  const std::size_t v = head.b2.size();
  if (head.w1.rows() != 2 * l || v != params.encoder.vocab_size()) {
    throw std::invalid_argument("cqr_loss: head " + head.w1.shape_string() + " / " + head.w2.shape_string() +
                                " does not match the encoder");
  }
  long double loss = 0.0L;
  std::vector<double> labels(v, 0.0);
  std::vector<double> da2(v, 0.0);
  for (const auto& ex : batch) {
    const auto enc = encode(ex.q, params.encoder, mode, rng);
    auto x = intent_representation(enc);
    const auto mask = dropout_mask(x.size(), params.input_dropout, mode, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] *= mask[i];
    }
    const auto f = head_forward(head, std::move(x));
    std::fill(labels.begin(), labels.end(), 0.0);
    for (auto id : ex.positives) {
      if (id == Vocabulary::kUnk || id >= v) {
        throw std::invalid_argument("cqr_loss: label id " + std::to_string(id) + " outside the label space");
      }
      labels[id] = 1.0;
    }
    da2[0] = 0.0;
    for (std::size_t i = 1; i < v; ++i) {
      const auto term = bce_from_logit(f.logits[i], labels[i]);
      loss += term.loss;
      da2[i] = term.dlogit;
    }
    if (!grads) {
      continue;
    }
    auto& g = grads->head;
    kernels::axpy(1.0, da2, g.b2.values());
    kernels::outer_acc(f.h1, da2, g.w2);
    std::vector<double> da1(f.a1.size(), 0.0);
    kernels::matvec_acc(head.w2, da2, da1);
    for (std::size_t j = 0; j < da1.size(); ++j) {
      if (f.a1[j] <= 0.0) {
        da1[j] = 0.0;
      }
    }
    kernels::axpy(1.0, da1, g.b1.values());
    kernels::outer_acc(f.x, da1, g.w1);
    std::vector<double> dx(2 * l, 0.0);
    kernels::matvec_acc(head.w1, da1, dx);
    auto sg = StateGradients::zeros(enc.length(), l);
    auto df = sg.forward.row(enc.length());
    auto db = sg.backward.row(1);
    for (std::size_t i = 0; i < l; ++i) {
      df[i] += dx[i] * mask[i];
      db[i] += dx[l + i] * mask[l + i];
    }
    encode_backward(enc, sg, params.encoder, grads->encoder);
  }
  return loss;
}

std::vector<ScoredTerm> rank_refinements(std::span<const double> scores, const Vocabulary& vocab) {
  if (scores.size() != vocab.size()) {
    throw std::invalid_argument("rank_refinements: " + std::to_string(scores.size()) + " scores for a vocabulary of " +
                                std::to_string(vocab.size()));
  }
  std::vector<ScoredTerm> out;
  out.reserve(scores.size());
  for (TermId id = 1; id < scores.size(); ++id) {
    out.push_back({id, vocab.term(id), scores[id]});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

std::vector<ScoredTerm> predict_refinements(const Query& q, const CqrParams& params, const Vocabulary& vocab,
                                            std::size_t k, bool skip_stopwords) {
  if (k == 0 || k > vocab.size() - 1) {
    throw std::invalid_argument("predict_refinements: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(vocab.size() - 1) + "]");
  }
  auto ranked = rank_refinements(refinement_scores(q, params), vocab);
  if (skip_stopwords) {
    std::erase_if(ranked, [&](const ScoredTerm& s) { return vocab.is_stop(s.id); });
  }
  if (ranked.size() > k) {
    ranked.resize(k);
  }
  return ranked;
}

std::vector<ScoredTerm> CqrModel::refine(std::string_view raw, std::size_t k, bool skip_stopwords) const {
  return predict_refinements(tokenize_frozen(raw, vocab), params, vocab, k, skip_stopwords);
}

double refinement_ap_nnz(const CqrParams& params, const Vocabulary& vocab, std::span<const ReformulationPair> pairs,
                         const StopWords& stopwords) {
  PrecisionAccumulator acc(stopwords);
  std::vector<std::string> predicted;
  for (const auto& pair : pairs) {
    const auto rq_tokens = tokenize_text(pair.rq.raw);
    const std::set<std::string> truth(rq_tokens.begin(), rq_tokens.end());
    predicted.clear();
    for (auto& s : rank_refinements(refinement_scores(pair.q, params), vocab)) {
      predicted.push_back(std::move(s.term));
    }
    acc.add(predicted, truth);
  }
  return acc.summary().ap_nnz;
}

CqrModel train_cqr(std::span<const ReformulationPair> train, std::span<const ReformulationPair> validation,
                   const Vocabulary& vocab, const StopWords& stopwords, const RunConfig& cfg,
                   const ProgressFn& progress) {
  cfg.validate();
  if (train.empty()) {
    throw std::invalid_argument("train_cqr: empty training set");
  }
  CqrModel model;
  model.config = cfg;
  model.vocab = vocab;
  model.stopwords = stopwords;
  Rng rng(cfg.seed);
  model.params = init_cqr_params(vocab.size(), cfg, rng);
  if (!cfg.embeddings.empty()) {
    load_embeddings(cfg.embeddings, vocab, model.params.encoder);
  }
  std::vector<RefinementExample> examples;
  std::vector<std::size_t> lengths;
  examples.reserve(train.size());
  for (const auto& pair : train) {
    examples.push_back(make_refinement_example(pair, vocab));
    lengths.push_back(pair.q.size());
  }
  std::vector<RefinementExample> batch;
  auto batch_loss = [&](std::span<const std::size_t> ids, CqrParams& grads, Rng& r) {
    batch.clear();
    for (auto i : ids) {
      batch.push_back(examples[i]);
    }
    return cqr_loss(batch, model.params, Mode::train, r, &grads);
  };
  auto validate = [&](const CqrParams& params) { return refinement_ap_nnz(params, vocab, validation, stopwords); };
  model.trace = run_training(model.params, lengths, cfg, rng, batch_loss, validate, !validation.empty(), progress);
  return model;
}

json cqr_to_json(const CqrModel& model) {
  json j = model_envelope("cqr");
  j["config"] = to_json(model.config);
  j["vocabulary"] = vocabulary_to_json(model.vocab, model.stopwords);
  j["tensors"] = named_tensors_to_json(model.params);
  j["training"] = trace_to_json(model.trace);
  return j;
}

CqrModel cqr_from_json(const json& j) {
  check_envelope(j, "cqr");
  try {
    CqrModel model;
    model.config = run_config_from_json(j.at("config"));
    model.vocab = vocabulary_from_json(j.at("vocabulary"));
    model.stopwords = stopwords_from_json(j.at("vocabulary"));
    Rng rng(0);
    model.params = init_cqr_params(model.vocab.size(), model.config, rng);
    load_named_tensors(j.at("tensors"), model.params);
    model.trace = trace_from_json(j.value("training", json()));
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed cqr model: ") + e.what());
  }
}

}  // namespace qintent
