#include "qintent/ctw.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qintent/bce.hpp"
#include "qintent/errors.hpp"
#include "qintent/metrics.hpp"
#include "qintent/model_io.hpp"

namespace qintent {

using nlohmann::json;

namespace {

void uniform_fill(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.values()) {
    v = rng.uniform(-bound, bound);
  }
}

EncoderShape encoder_shape(std::size_t vocab_size, const RunConfig& cfg) {
  return {vocab_size, cfg.embedding_dim, cfg.hidden, cfg.layers, cfg.dropout};
}

}  // namespace

CtwParams init_ctw_params(std::size_t vocab_size, const RunConfig& cfg, Rng& rng) {
  cfg.validate();
  CtwParams p;
  p.encoder = init_encoder(encoder_shape(vocab_size, cfg), rng);
  p.input_dropout = cfg.ctw_input_dropout;
  const std::size_t in = cfg.embedding_dim + 2 * cfg.hidden;
  p.head.w1 = Tensor({in, cfg.ctw_hidden});
  p.head.b1 = Tensor({cfg.ctw_hidden});
  p.head.w2 = Tensor({cfg.ctw_hidden, 1});
  p.head.b2 = Tensor({1});
  const double b_in = 1.0 / std::sqrt(static_cast<double>(in));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(cfg.ctw_hidden));
  uniform_fill(p.head.w1, b_in, rng);
  uniform_fill(p.head.b1, b_in, rng);
  uniform_fill(p.head.w2, b_hidden, rng);
  uniform_fill(p.head.b2, b_hidden, rng);
  return p;
}

std::vector<double> ctw_features(const EncodedQuery& enc, const EncoderParams& encoder, std::size_t t) {
  if (t < 1 || t > enc.length()) {
    throw std::out_of_range("ctw_features: position " + std::to_string(t) + " outside [1, " +
                            std::to_string(enc.length()) + "]");
  }
  const std::size_t l = enc.hidden_size();
  const auto emb = encoder.embedding.row(enc.terms()[t - 1]);
  std::vector<double> out(emb.begin(), emb.end());
  out.reserve(emb.size() + 2 * l);
  const auto f = enc.h_forward(t);
  const auto f_prev = enc.h_forward(t - 1);
  for (std::size_t i = 0; i < l; ++i) {
    out.push_back(f[i] - f_prev[i]);
  }
  const auto b = enc.h_backward(t);
  const auto b_next = enc.h_backward(t + 1);
  for (std::size_t i = 0; i < l; ++i) {
    out.push_back(b[i] - b_next[i]);
  }
  return out;
}

namespace {

struct HeadForward {
  std::vector<double> x;
  std::vector<double> a1;
  std::vector<double> h1;
  double logit = 0.0;
};

HeadForward head_forward(const CtwHeadParams& head, std::vector<double> x) {
  HeadForward f;
  f.x = std::move(x);
  f.a1.assign(head.b1.values().begin(), head.b1.values().end());
  kernels::vecmat_acc(f.x, head.w1, f.a1);
  f.h1.resize(f.a1.size());
  f.logit = head.b2[0];
  for (std::size_t j = 0; j < f.a1.size(); ++j) {
    f.h1[j] = f.a1[j] > 0.0 ? f.a1[j] : 0.0;
    f.logit += f.h1[j] * head.w2[j];
  }
  return f;
}

}  // namespace

TermWeights predict_weights(const Query& q, const CtwParams& params) {
  if (q.terms.empty()) {
    throw EmptyQuery("predict_weights: empty query");
  }
  Rng unused(0);
  const auto enc = encode(q, params.encoder, Mode::eval, unused);
  TermWeights out;
  out.reserve(q.size());
  for (std::size_t t = 1; t <= q.size(); ++t) {
    out.push_back(sigmoid(head_forward(params.head, ctw_features(enc, params.encoder, t)).logit));
  }
  return out;
}

TermWeightExample make_weight_example(const ReformulationPair& pair) {
  const auto q_tokens = tokenize_text(pair.q.raw);
  if (q_tokens.size() != pair.q.terms.size()) {
    throw std::invalid_argument("make_weight_example: query terms do not match raw text '" + pair.q.raw + "'");
  }
  const auto rq_tokens = tokenize_text(pair.rq.raw);
  const std::set<std::string> target(rq_tokens.begin(), rq_tokens.end());
  TermWeightExample ex;
  ex.q = pair.q;
  for (const auto& t : q_tokens) {
    ex.labels.push_back(target.contains(t) ? 1.0 : 0.0);
  }
  return ex;
}

long double ctw_loss(std::span<const TermWeightExample> batch, const CtwParams& params, Mode mode, Rng& rng,
                     CtwParams* grads) {
  const auto& head = params.head;
  const std::size_t d = params.encoder.embedding_dim();
  const std::size_t l = params.encoder.hidden_size();
  const std::size_t in = d + 2 * l;
  if (head.w1.rows() != in) {
    throw std::invalid_argument("ctw_loss: head input " + head.w1.shape_string() + " does not match features of " +
                                std::to_string(in));
  }
  long double loss = 0.0L;
  for (const auto& ex : batch) {
    if (ex.labels.size() != ex.q.size()) {
      throw std::invalid_argument("ctw_loss: " + std::to_string(ex.labels.size()) + " labels for a query of " +
                                  std::to_string(ex.q.size()) + " terms");
    }
    const auto enc = encode(ex.q, params.encoder, mode, rng);
    const std::size_t n = enc.length();
    StateGradients sg;
    if (grads) {
      sg = StateGradients::zeros(n, l);
    }
    for (std::size_t t = 1; t <= n; ++t) {
      auto x = ctw_features(enc, params.encoder, t);
      const auto mask = dropout_mask(in, params.input_dropout, mode, rng);
      for (std::size_t i = 0; i < in; ++i) {
        x[i] *= mask[i];
      }
      const auto f = head_forward(head, std::move(x));
      const auto term = bce_from_logit(f.logit, ex.labels[t - 1]);
      loss += term.loss;
      if (!grads || term.dlogit == 0.0) {
        continue;
      }
      auto& g = grads->head;
      const double da2 = term.dlogit;
      g.b2[0] += da2;
      std::vector<double> da1(f.a1.size(), 0.0);
      for (std::size_t j = 0; j < f.a1.size(); ++j) {
        g.w2[j] += f.h1[j] * da2;
        da1[j] = f.a1[j] > 0.0 ? head.w2[j] * da2 : 0.0;
      }
      kernels::axpy(1.0, da1, g.b1.values());
      kernels::outer_acc(f.x, da1, g.w1);
      std::vector<double> dfeat(in, 0.0);
      kernels::matvec_acc(head.w1, da1, dfeat);
      for (std::size_t i = 0; i < in; ++i) {
        dfeat[i] *= mask[i];
      }
      auto demb = grads->encoder.embedding.row(ex.q.terms[t - 1]);
      for (std::size_t i = 0; i < d; ++i) {
        demb[i] += dfeat[i];
      }
      auto df = sg.forward.row(t);
      auto df_prev = sg.forward.row(t - 1);
      auto db = sg.backward.row(t);
      auto db_next = sg.backward.row(t + 1);
      for (std::size_t i = 0; i < l; ++i) {
        df[i] += dfeat[d + i];
        df_prev[i] -= dfeat[d + i];
        db[i] += dfeat[d + l + i];
        db_next[i] -= dfeat[d + l + i];
      }
    }
    if (grads) {
      encode_backward(enc, sg, params.encoder, grads->encoder);
    }
  }
  return loss;
}

TermWeights CtwModel::weigh(std::string_view raw) const {
  return predict_weights(tokenize_frozen(raw, vocab), params);
}

double weighting_ap_nnz(const CtwParams& params, std::span<const ReformulationPair> pairs, const StopWords& stopwords) {
  PrecisionAccumulator acc(stopwords);
  for (const auto& pair : pairs) {
    const auto q_tokens = tokenize_text(pair.q.raw);
    const auto rq_tokens = tokenize_text(pair.rq.raw);
    const auto weights = predict_weights(pair.q, params);
    acc.add(rank_terms_by_weight(q_tokens, weights), retained_terms(q_tokens, rq_tokens));
  }
  return acc.summary().ap_nnz;
}

CtwModel train_ctw(std::span<const ReformulationPair> train, std::span<const ReformulationPair> validation,
                   const Vocabulary& vocab, const StopWords& stopwords, const RunConfig& cfg,
                   const ProgressFn& progress) {
  cfg.validate();
  if (train.empty()) {
    throw std::invalid_argument("train_ctw: empty training set");
  }
  CtwModel model;
  model.config = cfg;
  model.vocab = vocab;
  model.stopwords = stopwords;
  Rng rng(cfg.seed);
  model.params = init_ctw_params(vocab.size(), cfg, rng);
  if (!cfg.embeddings.empty()) {
    load_embeddings(cfg.embeddings, vocab, model.params.encoder);
  }

  std::vector<TermWeightExample> examples;
  std::vector<std::size_t> lengths;
  examples.reserve(train.size());
  for (const auto& pair : train) {
    examples.push_back(make_weight_example(pair));
    lengths.push_back(pair.q.size());
  }
  std::vector<TermWeightExample> batch;
  auto batch_loss = [&](std::span<const std::size_t> ids, CtwParams& grads, Rng& r) {
    batch.clear();
    for (auto i : ids) {
      batch.push_back(examples[i]);
    }
    return ctw_loss(batch, model.params, Mode::train, r, &grads);
  };
  auto validate = [&](const CtwParams& params) { return weighting_ap_nnz(params, validation, stopwords); };
  model.trace = run_training(model.params, lengths, cfg, rng, batch_loss, validate, !validation.empty(), progress);
  return model;
}

json ctw_to_json(const CtwModel& model) {
  json j = model_envelope("ctw");
  j["config"] = to_json(model.config);
  j["vocabulary"] = vocabulary_to_json(model.vocab, model.stopwords);
  j["tensors"] = named_tensors_to_json(model.params);
  j["training"] = trace_to_json(model.trace);
  return j;
}

CtwModel ctw_from_json(const json& j) {
  check_envelope(j, "ctw");
  try {
    CtwModel model;
    model.config = run_config_from_json(j.at("config"));
    model.vocab = vocabulary_from_json(j.at("vocabulary"));
    model.stopwords = stopwords_from_json(j.at("vocabulary"));
    Rng rng(0);
    model.params = init_ctw_params(model.vocab.size(), model.config, rng);
    load_named_tensors(j.at("tensors"), model.params);
    model.trace = trace_from_json(j.value("training", json()));
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed ctw model: ") + e.what());
  }
}

}  // namespace qintent
