#include "qintent/extended_loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qintent/bce.hpp"
#include "qintent/errors.hpp"

namespace qintent {

namespace {

using Real = long double;
using Vec = std::vector<Real>;

Real sigmoid_ext(Real x) {
  x = std::clamp(x, -30.0L, 30.0L);
  return 1.0L / (1.0L + std::exp(-x));
}

Real bce_ext(Real logit, double label) {
  const Real s = sigmoid_ext(logit);
  const Real floor = kProbabilityFloor;
  const Real p = std::clamp(s, floor, 1.0L - floor);
  return -(label * std::log(p) + (1.0L - label) * std::log(1.0L - p));
}

// b + x·W
Vec affine(const Vec& x, const Tensor& w, const Tensor& b) {
  Vec out(b.values().begin(), b.values().end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto row = w.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += x[i] * row[j];
    }
  }
  return out;
}

void add_vecmat(const Vec& x, const Tensor& w, Vec& out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto row = w.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += x[i] * row[j];
    }
  }
}

Vec gru(const Vec& h, const Vec& x, const GruLayerParams& p) {
  const std::size_t l = h.size();
  Vec z = affine(x, p.w_z, p.b_z);
  add_vecmat(h, p.u_z, z);
  Vec r = affine(x, p.w_r, p.b_r);
  add_vecmat(h, p.u_r, r);
  for (std::size_t j = 0; j < l; ++j) {
    z[j] = sigmoid_ext(z[j]);
    r[j] = sigmoid_ext(r[j]);
  }
  Vec rh(l);
  for (std::size_t j = 0; j < l; ++j) {
    rh[j] = r[j] * h[j];
  }
  Vec c = affine(x, p.w_h, p.b_h);
  add_vecmat(rh, p.u_h, c);
  Vec out(l);
  for (std::size_t j = 0; j < l; ++j) {
    out[j] = (1.0L - z[j]) * h[j] + z[j] * std::tanh(c[j]);
  }
  return out;
}

// Top-layer states by position, with the dropout draws of run_stack.
std::vector<Vec> run_direction(std::span<const TermId> terms, const EncoderParams& params,
                               const std::vector<GruLayerParams>& stack, bool reverse, Mode mode, Rng& rng) {
  const std::size_t n = terms.size();
  const std::size_t l = params.hidden_size();
  std::vector<Vec> below(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = params.embedding.row(terms[t]);
    below[t].assign(row.begin(), row.end());
  }
  for (std::size_t k = 0; k < stack.size(); ++k) {
    if (k > 0) {
      for (std::size_t t = 0; t < n; ++t) {
        const auto mask = dropout_mask(l, params.dropout, mode, rng);
        for (std::size_t j = 0; j < l; ++j) {
          below[t][j] *= mask[j];
        }
      }
    }
    std::vector<Vec> states(n);
    Vec h(l, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = reverse ? n - 1 - i : i;
      h = gru(h, below[t], stack[k]);
      states[t] = h;
    }
    below = std::move(states);
  }
  return below;
}

struct States {
  std::vector<Vec> forward;   // index t in [0, n]
  std::vector<Vec> backward;  // index t in [1, n+1]
};

States encode_ext(const Query& q, const EncoderParams& params, Mode mode, Rng& rng) {
  if (q.terms.empty()) {
    throw EmptyQuery("encode: empty query");
  }
  for (auto id : q.terms) {
    if (id >= params.vocab_size()) {
      throw std::out_of_range("encode: term id " + std::to_string(id) + " outside the vocabulary");
    }
  }
  const std::size_t n = q.size();
  const std::size_t l = params.hidden_size();
  auto f = run_direction(q.terms, params, params.forward, false, mode, rng);
  auto b = run_direction(q.terms, params, params.backward, true, mode, rng);
  States s;
  s.forward.assign(n + 1, Vec(l, 0.0L));
  s.backward.assign(n + 2, Vec(l, 0.0L));
  for (std::size_t t = 1; t <= n; ++t) {
    s.forward[t] = std::move(f[t - 1]);
    s.backward[t] = std::move(b[t - 1]);
  }
  return s;
}

Vec relu_layer(const Vec& x, const Tensor& w, const Tensor& b) {
  Vec a = affine(x, w, b);
  for (auto& v : a) {
    v = v > 0.0L ? v : 0.0L;
  }
  return a;
}

}  // namespace

long double ctw_loss_extended(std::span<const TermWeightExample> batch, const CtwParams& params, Mode mode, Rng& rng,
                              std::vector<long double>* terms) {
  const std::size_t d = params.encoder.embedding_dim();
  const std::size_t l = params.encoder.hidden_size();
  const std::size_t in = d + 2 * l;
  Real loss = 0.0L;
  for (const auto& ex : batch) {
    const auto s = encode_ext(ex.q, params.encoder, mode, rng);
    for (std::size_t t = 1; t <= ex.q.size(); ++t) {
      const auto emb = params.encoder.embedding.row(ex.q.terms[t - 1]);
      Vec x(emb.begin(), emb.end());
      for (std::size_t i = 0; i < l; ++i) {
        x.push_back(s.forward[t][i] - s.forward[t - 1][i]);
      }
      for (std::size_t i = 0; i < l; ++i) {
        x.push_back(s.backward[t][i] - s.backward[t + 1][i]);
      }
      const auto mask = dropout_mask(in, params.input_dropout, mode, rng);
      for (std::size_t i = 0; i < in; ++i) {
        x[i] *= mask[i];
      }
      const Vec h1 = relu_layer(x, params.head.w1, params.head.b1);
      const Real term = bce_ext(affine(h1, params.head.w2, params.head.b2)[0], ex.labels[t - 1]);
      loss += term;
      if (terms) {
        terms->push_back(term);
      }
    }
  }
  return loss;
}

long double cqr_loss_extended(std::span<const RefinementExample> batch, const CqrParams& params, Mode mode, Rng& rng,
                              std::vector<long double>* terms) {
  const std::size_t l = params.encoder.hidden_size();
  const std::size_t v = params.head.b2.size();
  Real loss = 0.0L;
  std::vector<double> labels(v);
  for (const auto& ex : batch) {
    const auto s = encode_ext(ex.q, params.encoder, mode, rng);
    Vec x = s.forward[ex.q.size()];
    x.insert(x.end(), s.backward[1].begin(), s.backward[1].end());
    const auto mask = dropout_mask(2 * l, params.input_dropout, mode, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] *= mask[i];
    }
    const Vec logits = affine(relu_layer(x, params.head.w1, params.head.b1), params.head.w2, params.head.b2);
    std::fill(labels.begin(), labels.end(), 0.0);
    for (auto id : ex.positives) {
      labels.at(id) = 1.0;
    }
    for (std::size_t i = 1; i < v; ++i) {
      const Real term = bce_ext(logits[i], labels[i]);
      loss += term;
      if (terms) {
        terms->push_back(term);
      }
    }
  }
  return loss;
}

}  // namespace qintent
