#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qintent/corpus.hpp"
#include "qintent/dropout.hpp"
#include "qintent/rng.hpp"
#include "qintent/tensor.hpp"

namespace qintent {

/// One GRU layer. Input matrices are (d_in × l) and applied as x·W, recurrent
/// matrices are (l × l) and applied as h·U.
struct GruLayerParams {
  Tensor w_z, u_z, b_z;
  Tensor w_r, u_r, b_r;
  Tensor w_h, u_h, b_h;

  std::size_t input_size() const { return w_z.rows(); }
  std::size_t hidden_size() const { return b_z.size(); }

  static GruLayerParams zeros(std::size_t input, std::size_t hidden);
};

template <typename Fn>
void visit_tensors(GruLayerParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "w_z", p.w_z);
  fn(prefix + "u_z", p.u_z);
  fn(prefix + "b_z", p.b_z);
  fn(prefix + "w_r", p.w_r);
  fn(prefix + "u_r", p.u_r);
  fn(prefix + "b_r", p.b_r);
  fn(prefix + "w_h", p.w_h);
  fn(prefix + "u_h", p.u_h);
  fn(prefix + "b_h", p.b_h);
}

struct EncoderShape {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 32;
  std::size_t hidden = 24;
  std::size_t layers = 1;
  double dropout = 0.0;
};

/// Embedding table plus independent forward and backward GRU stacks.
struct EncoderParams {
  Tensor embedding;  // |V| × d
  std::vector<GruLayerParams> forward;
  std::vector<GruLayerParams> backward;
  double dropout = 0.0;

  std::size_t vocab_size() const { return embedding.rows(); }
  std::size_t embedding_dim() const { return embedding.cols(); }
  std::size_t hidden_size() const { return forward.empty() ? 0 : forward.front().hidden_size(); }
  std::size_t layers() const { return forward.size(); }
  EncoderShape shape() const;
};

template <typename Fn>
void visit_tensors(EncoderParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + "embedding", p.embedding);
  for (std::size_t k = 0; k < p.forward.size(); ++k) {
    visit_tensors(p.forward[k], prefix + "forward." + std::to_string(k) + ".", fn);
  }
  for (std::size_t k = 0; k < p.backward.size(); ++k) {
    visit_tensors(p.backward[k], prefix + "backward." + std::to_string(k) + ".", fn);
  }
}

/// Embeddings uniform in [-0.05, 0.05]; GRU weights and biases uniform in
/// [-1/sqrt(l), 1/sqrt(l)].
EncoderParams init_encoder(const EncoderShape& shape, Rng& rng);

/// Overwrites embedding rows from a text file with one term followed by d
/// floats per line. Terms absent from `vocab` are ignored. Returns the
/// number of rows replaced.
std::size_t load_embeddings(const std::string& path, const Vocabulary& vocab, EncoderParams& params);

/// z = σ(x·W_z + h·U_z + b_z), r = σ(x·W_r + h·U_r + b_r),
/// c = tanh(x·W_h + (r⊙h)·U_h + b_h), h' = (1-z)⊙h + z⊙c.
std::vector<double> gru_cell(std::span<const double> h_prev, std::span<const double> x, const GruLayerParams& p);

/// Intermediate values of one GRU step, kept for the backward pass.
struct GruStep {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<double> z;
  std::vector<double> r;
  std::vector<double> c;
  std::vector<double> h;
};

/// Steps of every layer of one direction, indexed by query position
/// (0-based) regardless of the direction of processing. `masks[k]` holds
/// the dropout multipliers applied to the input of layer k (empty for
/// layer 0).
struct DirectionTrace {
  std::vector<std::vector<GruStep>> layers;
  std::vector<std::vector<std::vector<double>>> masks;
};

/// Top-layer states of both directions including the zero boundary states.
class EncodedQuery {
public:
  std::size_t length() const { return terms_.size(); }
  std::size_t hidden_size() const { return hidden_; }
  std::span<const TermId> terms() const { return terms_; }

  /// h^f_t for t in [0, |q|]; t = 0 is the zero boundary state.
  std::span<const double> h_forward(std::size_t t) const;
  /// h^b_t for t in [1, |q|+1]; t = |q|+1 is the zero boundary state.
  std::span<const double> h_backward(std::size_t t) const;

  const DirectionTrace& forward_trace() const { return forward_; }
  const DirectionTrace& backward_trace() const { return backward_; }

private:
  friend EncodedQuery encode(std::span<const TermId>, const EncoderParams&, Mode, Rng&);

  std::vector<TermId> terms_;
  std::size_t hidden_ = 0;
  std::vector<double> zero_;
  DirectionTrace forward_;
  DirectionTrace backward_;
};

/// Runs both GRU stacks over `terms`. Dropout between stacked layers is
/// applied only in train mode. Rejects empty queries and out-of-range ids.
EncodedQuery encode(std::span<const TermId> terms, const EncoderParams& params, Mode mode, Rng& rng);
inline EncodedQuery encode(const Query& q, const EncoderParams& params, Mode mode, Rng& rng) {
  return encode(std::span<const TermId>(q.terms), params, mode, rng);
}

/// [h^f_{|q|}, h^b_1]
std::vector<double> intent_representation(const EncodedQuery& enc);

/// Loss gradients with respect to the top-layer states of one query.
/// Row t of `forward` is dL/dh^f_t for t in [0, |q|] and row t of `backward`
/// is dL/dh^b_t for t in [1, |q|+1]; boundary rows are ignored.
struct StateGradients {
  Tensor forward;
  Tensor backward;

  static StateGradients zeros(std::size_t length, std::size_t hidden);
};

/// Backpropagates `grads` through both stacks and the embedding lookup,
/// accumulating into `out` (shaped like the encoder).
void encode_backward(const EncodedQuery& enc, const StateGradients& grads, const EncoderParams& params,
                     EncoderParams& out);

}  // namespace qintent
