#include "qintent/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qintent/errors.hpp"

namespace qintent {

GruLayerParams GruLayerParams::zeros(std::size_t input, std::size_t hidden) {
  GruLayerParams p;
  for (Tensor* w : {&p.w_z, &p.w_r, &p.w_h}) {
    *w = Tensor({input, hidden});
  }
  for (Tensor* u : {&p.u_z, &p.u_r, &p.u_h}) {
    *u = Tensor({hidden, hidden});
  }
  for (Tensor* b : {&p.b_z, &p.b_r, &p.b_h}) {
    *b = Tensor({hidden});
  }
  return p;
}

EncoderShape EncoderParams::shape() const {
  return {vocab_size(), embedding_dim(), hidden_size(), layers(), dropout};
}

EncoderParams init_encoder(const EncoderShape& shape, Rng& rng) {
  if (shape.vocab_size == 0 || shape.embedding_dim == 0 || shape.hidden == 0 || shape.layers == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  check_dropout_rate(shape.dropout);
  EncoderParams p;
  p.dropout = shape.dropout;
  p.embedding = Tensor({shape.vocab_size, shape.embedding_dim});
  for (auto& v : p.embedding.values()) {
    v = rng.uniform(-0.05, 0.05);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  auto stack = [&](std::vector<GruLayerParams>& layers) {
    for (std::size_t k = 0; k < shape.layers; ++k) {
      auto layer = GruLayerParams::zeros(k == 0 ? shape.embedding_dim : shape.hidden, shape.hidden);
      visit_tensors(layer, "", [&](const std::string&, Tensor& t) {
        for (auto& v : t.values()) {
          v = rng.uniform(-bound, bound);
        }
      });
      layers.push_back(std::move(layer));
    }
  };
  stack(p.forward);
  stack(p.backward);
  return p;
}

std::size_t load_embeddings(const std::string& path, const Vocabulary& vocab, EncoderParams& params) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open embedding file " + path);
  }
  const std::size_t d = params.embedding_dim();
  std::size_t replaced = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string term;
    if (!(fields >> term)) {
      continue;
    }
    std::vector<double> row;
    double v = 0.0;
    while (fields >> v) {
      row.push_back(v);
    }
    if (!fields.eof() || row.size() != d) {
      throw SchemaError("embedding line " + std::to_string(lineno) + ": expected " + std::to_string(d) +
                        " values for '" + term + "'");
    }
    if (auto id = vocab.find(term); id && *id != Vocabulary::kUnk) {
      std::copy(row.begin(), row.end(), params.embedding.row(*id).begin());
      ++replaced;
    }
  }
  return replaced;
}

namespace {

void check_cell_shapes(std::size_t h, std::size_t x, const GruLayerParams& p) {
  if (x != p.input_size() || h != p.hidden_size()) {
    throw std::invalid_argument("gru_cell: input " + std::to_string(x) + " and state " + std::to_string(h) +
                                " do not match layer " + p.w_z.shape_string() + " / " + p.b_z.shape_string());
  }
}

void gru_step(std::span<const double> h_prev, std::span<const double> x, const GruLayerParams& p, GruStep& s) {
  const std::size_t l = p.hidden_size();
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.z.assign(p.b_z.values().begin(), p.b_z.values().end());
  s.r.assign(p.b_r.values().begin(), p.b_r.values().end());
  s.c.assign(p.b_h.values().begin(), p.b_h.values().end());
  kernels::vecmat_acc(x, p.w_z, s.z);
  kernels::vecmat_acc(h_prev, p.u_z, s.z);
  kernels::vecmat_acc(x, p.w_r, s.r);
  kernels::vecmat_acc(h_prev, p.u_r, s.r);
  std::vector<double> rh(l);
  for (std::size_t i = 0; i < l; ++i) {
    s.z[i] = sigmoid(s.z[i]);
    s.r[i] = sigmoid(s.r[i]);
    rh[i] = s.r[i] * h_prev[i];
  }
  kernels::vecmat_acc(x, p.w_h, s.c);
  kernels::vecmat_acc(rh, p.u_h, s.c);
  s.h.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    s.c[i] = std::tanh(s.c[i]);
    s.h[i] = (1.0 - s.z[i]) * h_prev[i] + s.z[i] * s.c[i];
  }
}

/// Backward through one step. Accumulates parameter gradients into `g`,
/// input gradients into `dx` and returns dL/dh_prev.
std::vector<double> gru_step_backward(const GruStep& s, std::span<const double> dh, const GruLayerParams& p,
                                      GruLayerParams& g, std::span<double> dx) {
  const std::size_t l = p.hidden_size();
  std::vector<double> dh_prev(l), daz(l), dar(l), dac(l), rh(l);
  for (std::size_t i = 0; i < l; ++i) {
    const double dc = dh[i] * s.z[i];
    const double dz = dh[i] * (s.c[i] - s.h_prev[i]);
    dh_prev[i] = dh[i] * (1.0 - s.z[i]);
    dac[i] = dc * (1.0 - s.c[i] * s.c[i]);
    daz[i] = dz * s.z[i] * (1.0 - s.z[i]);
    rh[i] = s.r[i] * s.h_prev[i];
  }
  kernels::outer_acc(s.x, dac, g.w_h);
  kernels::outer_acc(rh, dac, g.u_h);
  kernels::axpy(1.0, dac, g.b_h.values());
  std::vector<double> drh(l, 0.0);
  kernels::matvec_acc(p.u_h, dac, drh);
  for (std::size_t i = 0; i < l; ++i) {
    const double dr = drh[i] * s.h_prev[i];
    dh_prev[i] += drh[i] * s.r[i];
    dar[i] = dr * s.r[i] * (1.0 - s.r[i]);
  }
  kernels::outer_acc(s.x, daz, g.w_z);
  kernels::outer_acc(s.h_prev, daz, g.u_z);
  kernels::axpy(1.0, daz, g.b_z.values());
  kernels::outer_acc(s.x, dar, g.w_r);
  kernels::outer_acc(s.h_prev, dar, g.u_r);
  kernels::axpy(1.0, dar, g.b_r.values());

  kernels::matvec_acc(p.w_z, daz, dx);
  kernels::matvec_acc(p.w_r, dar, dx);
  kernels::matvec_acc(p.w_h, dac, dx);
  kernels::matvec_acc(p.u_z, daz, dh_prev);
  kernels::matvec_acc(p.u_r, dar, dh_prev);
  return dh_prev;
}

/// Runs one direction's stack. `reverse` processes positions right to left.
DirectionTrace run_stack(std::span<const TermId> terms, const EncoderParams& params,
                         const std::vector<GruLayerParams>& stack, bool reverse, Mode mode, Rng& rng) {
  const std::size_t n = terms.size();
  const std::size_t l = params.hidden_size();
  DirectionTrace trace;
  trace.layers.resize(stack.size());
  trace.masks.resize(stack.size());
  for (std::size_t k = 0; k < stack.size(); ++k) {
    auto& steps = trace.layers[k];
    steps.resize(n);
    if (k > 0) {
      trace.masks[k].resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        trace.masks[k][t] = dropout_mask(l, params.dropout, mode, rng);
      }
    }
    std::vector<double> h(l, 0.0);
    std::vector<double> x;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = reverse ? n - 1 - i : i;
      if (k == 0) {
        const auto row = params.embedding.row(terms[t]);
        x.assign(row.begin(), row.end());
      } else {
        const auto& below = trace.layers[k - 1][t].h;
        const auto& mask = trace.masks[k][t];
        x.resize(l);
        for (std::size_t j = 0; j < l; ++j) {
          x[j] = below[j] * mask[j];
        }
      }
      gru_step(h, x, stack[k], steps[t]);
      h = steps[t].h;
    }
  }
  return trace;
}

/// `dtop[t]` is dL/dh_t for position t of the top layer.
void backward_stack(const DirectionTrace& trace, std::vector<std::vector<double>> dtop, std::span<const TermId> terms,
                    const std::vector<GruLayerParams>& stack, std::vector<GruLayerParams>& grads, bool reverse,
                    Tensor& dembedding) {
  const std::size_t n = terms.size();
  std::vector<std::vector<double>> dout = std::move(dtop);
  for (std::size_t kk = stack.size(); kk-- > 0;) {
    const auto& steps = trace.layers[kk];
    const std::size_t in = stack[kk].input_size();
    std::vector<std::vector<double>> dinput(n, std::vector<double>(in, 0.0));
    std::vector<double> carry(stack[kk].hidden_size(), 0.0);
    // Processing order is reversed relative to the forward run.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = reverse ? i : n - 1 - i;
      std::vector<double> dh = dout[t];
      kernels::axpy(1.0, carry, dh);
      carry = gru_step_backward(steps[t], dh, stack[kk], grads[kk], dinput[t]);
    }
    if (kk == 0) {
      for (std::size_t t = 0; t < n; ++t) {
        kernels::axpy(1.0, dinput[t], dembedding.row(terms[t]));
      }
    } else {
      const auto& masks = trace.masks[kk];
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < in; ++j) {
          dinput[t][j] *= masks[t][j];
        }
      }
      dout = std::move(dinput);
    }
  }
}

}  // namespace

std::vector<double> gru_cell(std::span<const double> h_prev, std::span<const double> x, const GruLayerParams& p) {
  check_cell_shapes(h_prev.size(), x.size(), p);
  GruStep s;
  gru_step(h_prev, x, p, s);
  return s.h;
}

EncodedQuery encode(std::span<const TermId> terms, const EncoderParams& params, Mode mode, Rng& rng) {
  if (terms.empty()) {
    throw EmptyQuery("encode: empty query");
  }
  if (params.forward.size() != params.backward.size() || params.forward.empty()) {
    throw std::invalid_argument("encode: forward and backward stacks must have equal, positive depth");
  }
  for (auto id : terms) {
    if (id >= params.vocab_size()) {
      throw std::out_of_range("encode: term id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(params.vocab_size()));
    }
  }
  EncodedQuery enc;
  enc.terms_.assign(terms.begin(), terms.end());
  enc.hidden_ = params.hidden_size();
  enc.zero_.assign(enc.hidden_, 0.0);
  enc.forward_ = run_stack(terms, params, params.forward, false, mode, rng);
  enc.backward_ = run_stack(terms, params, params.backward, true, mode, rng);
  return enc;
}

std::span<const double> EncodedQuery::h_forward(std::size_t t) const {
  if (t > length()) {
    throw std::out_of_range("h_forward: position " + std::to_string(t) + " outside [0, " +
                            std::to_string(length()) + "]");
  }
  return t == 0 ? std::span<const double>(zero_) : std::span<const double>(forward_.layers.back()[t - 1].h);
}

std::span<const double> EncodedQuery::h_backward(std::size_t t) const {
  if (t < 1 || t > length() + 1) {
    throw std::out_of_range("h_backward: position " + std::to_string(t) + " outside [1, " +
                            std::to_string(length() + 1) + "]");
  }
  return t == length() + 1 ? std::span<const double>(zero_)
                           : std::span<const double>(backward_.layers.back()[t - 1].h);
}

std::vector<double> intent_representation(const EncodedQuery& enc) {
  if (enc.length() == 0) {
    throw EmptyQuery("intent_representation: empty encoding");
  }
  const auto f = enc.h_forward(enc.length());
  const auto b = enc.h_backward(1);
  std::vector<double> out(f.begin(), f.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

StateGradients StateGradients::zeros(std::size_t length, std::size_t hidden) {
  return {Tensor({length + 2, hidden}), Tensor({length + 2, hidden})};
}

void encode_backward(const EncodedQuery& enc, const StateGradients& grads, const EncoderParams& params,
                     EncoderParams& out) {
  const std::size_t n = enc.length();
  std::vector<std::vector<double>> df(n), db(n);
  for (std::size_t t = 1; t <= n; ++t) {
    const auto rf = grads.forward.row(t);
    const auto rb = grads.backward.row(t);
    df[t - 1].assign(rf.begin(), rf.end());
    db[t - 1].assign(rb.begin(), rb.end());
  }
  backward_stack(enc.forward_trace(), std::move(df), enc.terms(), params.forward, out.forward, false, out.embedding);
  backward_stack(enc.backward_trace(), std::move(db), enc.terms(), params.backward, out.backward, true,
                 out.embedding);
}

}  // namespace qintent
