#include <doctest.h>

#include <cmath>

#include "qintent/encoder.hpp"
#include "qintent/gradcheck.hpp"

using namespace qintent;

namespace {

EncoderParams random_encoder(std::size_t vocab, std::size_t layers, double dropout, std::uint64_t seed) {
  EncoderShape shape;
  shape.vocab_size = vocab;
  shape.embedding_dim = 5;
  shape.hidden = 4;
  shape.layers = layers;
  shape.dropout = dropout;
  Rng rng(seed);
  auto p = init_encoder(shape, rng);
  // Larger embeddings than the default init so that states differ visibly.
  for (auto& x : p.embedding.values()) {
    x = rng.uniform(-1.0, 1.0);
  }
  return p;
}

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("gru cell at zero parameters halves the state") {
  const auto p = GruLayerParams::zeros(2, 3);
  const std::vector<double> h{0.4, -1.0, 2.0};
  const std::vector<double> x{1.0, -1.0};
  const auto out = gru_cell(h, x, p);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(out[i] == doctest::Approx(0.5 * h[i]));
  }
}

TEST_CASE("gru cell hand case") {
  auto p = GruLayerParams::zeros(1, 1);
  for (Tensor* t : {&p.w_z, &p.u_z, &p.w_r, &p.u_r, &p.w_h, &p.u_h}) {
    t->fill(1.0);
  }
  const std::vector<double> h0{0.0};
  const std::vector<double> x{1.0};
  const double z = 1.0 / (1.0 + std::exp(-1.0));
  const double c = std::tanh(1.0);
  const double expected = (1.0 - z) * 0.0 + z * c;
  CHECK(z == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(c == doctest::Approx(0.7616).epsilon(1e-4));
  CHECK(gru_cell(h0, x, p)[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gru_cell(h0, x, p)[0] == doctest::Approx(0.5568).epsilon(1e-4));
}

TEST_CASE("gru cell saturates towards the candidate") {
  auto p = GruLayerParams::zeros(1, 1);
  p.w_z.fill(100.0);
  p.w_h.fill(100.0);
  const std::vector<double> h0{-0.3};
  const std::vector<double> x{1.0};
  CHECK(gru_cell(h0, x, p)[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single term encodes one step per direction") {
  const auto p = random_encoder(6, 1, 0.0, 2);
  Rng rng(0);
  const std::vector<TermId> q{3};
  const auto enc = encode(q, p, Mode::eval, rng);
  const std::vector<double> zero(4, 0.0);
  const auto emb = as_vec(p.embedding.row(3));
  CHECK(as_vec(enc.h_forward(1)) == gru_cell(zero, emb, p.forward[0]));
  CHECK(as_vec(enc.h_backward(1)) == gru_cell(zero, emb, p.backward[0]));
  CHECK(as_vec(enc.h_forward(0)) == zero);
  CHECK(as_vec(enc.h_backward(2)) == zero);

  const auto rep = intent_representation(enc);
  CHECK(rep.size() == 8);
  auto expected = as_vec(enc.h_forward(1));
  const auto back = as_vec(enc.h_backward(1));
  expected.insert(expected.end(), back.begin(), back.end());
  CHECK(rep == expected);
}

TEST_CASE("reversing the query swaps the directions") {
  const auto p = random_encoder(8, 2, 0.0, 5);
  auto swapped = p;
  std::swap(swapped.forward, swapped.backward);
  const std::vector<TermId> q{1, 4, 2, 7};
  const std::vector<TermId> rev(q.rbegin(), q.rend());
  Rng rng(0);
  const auto a = encode(q, p, Mode::eval, rng);
  const auto b = encode(rev, swapped, Mode::eval, rng);
  const std::size_t n = q.size();
  for (std::size_t t = 1; t <= n; ++t) {
    CHECK(as_vec(b.h_forward(t)) == as_vec(a.h_backward(n + 1 - t)));
    CHECK(as_vec(b.h_backward(t)) == as_vec(a.h_forward(n + 1 - t)));
  }
}

TEST_CASE("the representation depends on word order") {
  Rng search(17);
  bool found = false;
  for (int trial = 0; trial < 20 && !found; ++trial) {
    const auto p = random_encoder(8, 1 + trial % 2, 0.0, 100 + trial);
    const std::vector<TermId> q{1, 2, 3, 4};
    const std::vector<TermId> permuted{1, 3, 2, 4};
    Rng rng(0);
    const auto a = intent_representation(encode(q, p, Mode::eval, rng));
    const auto b = intent_representation(encode(permuted, p, Mode::eval, rng));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    found = diff > 1e-6;
  }
  CHECK(found);
}

TEST_CASE("encode rejects bad input and stays deterministic") {
  const auto p = random_encoder(5, 2, 0.3, 1);
  Rng rng(0);
  CHECK_THROWS(encode(std::vector<TermId>{}, p, Mode::eval, rng));
  CHECK_THROWS(encode(std::vector<TermId>{1, 9}, p, Mode::eval, rng));
  Rng r1(4);
  Rng r2(4);
  const std::vector<TermId> q{1, 2, 3};
  CHECK(intent_representation(encode(q, p, Mode::train, r1)) == intent_representation(encode(q, p, Mode::train, r2)));
}

TEST_CASE("encoder gradients match finite differences") {
  for (std::size_t layers : {1, 2}) {
    auto p = random_encoder(7, layers, 0.3, 40 + layers);
    const std::vector<TermId> q{2, 5, 1};
    const std::size_t n = q.size();
    const std::size_t l = p.hidden_size();

    // L = Σ_t c_t·h^f_t + d_t·h^b_t with fixed random coefficients.
    Rng coef(9);
    auto grads_in = StateGradients::zeros(n, l);
    for (std::size_t t = 1; t <= n; ++t) {
      for (std::size_t i = 0; i < l; ++i) {
        grads_in.forward.at(t, i) = coef.uniform(-1, 1);
        grads_in.backward.at(t, i) = coef.uniform(-1, 1);
      }
    }
    auto loss = [&]() {
      Rng rng(77);
      const auto enc = encode(q, p, Mode::train, rng);
      long double s = 0;
      for (std::size_t t = 1; t <= n; ++t) {
        for (std::size_t i = 0; i < l; ++i) {
          s += grads_in.forward.at(t, i) * enc.h_forward(t)[i] + grads_in.backward.at(t, i) * enc.h_backward(t)[i];
        }
      }
      return s;
    };
    Rng rng(77);
    const auto enc = encode(q, p, Mode::train, rng);
    auto g = zeros_like(p);
    encode_backward(enc, grads_in, p, g);
    Rng sample(3);
    const auto report = finite_diff_check(loss, collect_params(p), collect_params(g), sample);
    CHECK_MESSAGE(report.passed(), "layers ", layers, " max error ", report.max_relative_error);
    CHECK(report.coordinates > 100);
  }
}
