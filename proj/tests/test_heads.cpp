#include <doctest.h>

#include <cmath>

#include "qintent/config.hpp"
#include "qintent/cqr.hpp"
#include "qintent/ctw.hpp"
#include "qintent/extended_loss.hpp"
#include "qintent/gradcheck.hpp"

using namespace qintent;

namespace {

RunConfig tiny(std::size_t layers = 2) {
  RunConfig cfg = preset_config("desk");
  cfg.embedding_dim = 4;
  cfg.hidden = 3;
  cfg.layers = layers;
  cfg.ctw_hidden = 5;
  cfg.cqr_hidden = 6;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  return cfg;
}

ReformulationPair make_pair(const std::string& q, const std::string& rq, Vocabulary& v,
                            VocabMode mode = VocabMode::build) {
  return {tokenize(q, mode, v), tokenize(rq, mode, v), std::nullopt};
}

std::vector<ReformulationPair> toy_corpus(Vocabulary& v) {
  const char* rows[][2] = {
      {"promo code for motorola phone", "motorola phone on sale"},
      {"cheap red garden hose", "red garden hose"},
      {"outdoor paint for house", "exterior paint for house"},
      {"best orbit gum", "orbit gum"},
      {"battery night light with timer", "night light"},
      {"free shipping samsung phone", "samsung phone"},
      {"mens steel work boots", "steel work boots"},
      {"new nokia phone case", "nokia phone"},
  };
  std::vector<ReformulationPair> out;
  for (int rep = 0; rep < 3; ++rep) {
    for (const auto& r : rows) {
      out.push_back(make_pair(r[0], r[1], v));
    }
  }
  v.apply_stopwords(StopWords::english_default());
  return out;
}

void zero_output(Tensor& w2, Tensor& b2) {
  w2.fill(0.0);
  b2.fill(0.0);
}

}  // namespace

TEST_CASE("ctw labels compare terms as strings") {
  Vocabulary v;
  const auto ex = make_weight_example(make_pair("promo code for motorola phone", "motorola phone on sale", v));
  CHECK(ex.labels == std::vector<double>{0, 0, 0, 1, 1});
  Vocabulary frozen;
  const auto oov = make_weight_example(make_pair("zzz phone", "zzz case", frozen, VocabMode::frozen));
  CHECK(oov.labels == std::vector<double>{1, 0});
}

TEST_CASE("ctw features at the boundaries") {
  Vocabulary v;
  v.add("a");
  v.add("b");
  v.add("c");
  Rng rng(1);
  const auto p = init_ctw_params(v.size(), tiny(), rng);
  const Query q{{1, 2, 3}, "a b c"};
  Rng r(0);
  const auto enc = encode(q, p.encoder, Mode::eval, r);
  const std::size_t d = 4;
  const std::size_t l = 3;
  for (std::size_t t = 1; t <= 3; ++t) {
    CHECK(ctw_features(enc, p.encoder, t).size() == d + 2 * l);
  }
  const auto first = ctw_features(enc, p.encoder, 1);
  for (std::size_t i = 0; i < l; ++i) {
    CHECK(first[d + i] == enc.h_forward(1)[i]);
  }
  const auto last = ctw_features(enc, p.encoder, 3);
  for (std::size_t i = 0; i < l; ++i) {
    CHECK(last[d + l + i] == enc.h_backward(3)[i]);
  }
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(first[i] == p.encoder.embedding.at(1, i));
  }
}

TEST_CASE("ctw with a zero output layer predicts one half") {
  Vocabulary v;
  const auto pairs = toy_corpus(v);
  Rng rng(2);
  auto p = init_ctw_params(v.size(), tiny(), rng);
  zero_output(p.head.w2, p.head.b2);
  const auto w = predict_weights(pairs[0].q, p);
  CHECK(w.size() == 5);
  for (double x : w) {
    CHECK(x == 0.5);
  }
  // One position, label 1, s = 0.5.
  const TermWeightExample ex{Query{{pairs[0].q.terms[3]}, "motorola"}, {1.0}};
  Rng r(0);
  CHECK(static_cast<double>(ctw_loss(std::span(&ex, 1), p, Mode::eval, r, nullptr)) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("ctw loss is near zero for confident correct predictions") {
  Vocabulary v;
  const auto pairs = toy_corpus(v);
  Rng rng(2);
  auto p = init_ctw_params(v.size(), tiny(), rng);
  p.head.w2.fill(0.0);
  p.head.b2[0] = 40.0;
  const TermWeightExample ex{pairs[0].q, std::vector<double>(5, 1.0)};
  Rng r(0);
  CHECK(static_cast<double>(ctw_loss(std::span(&ex, 1), p, Mode::eval, r, nullptr)) < 1e-5);
}

TEST_CASE("ctw gradients match finite differences") {
  for (std::size_t layers : {1, 2}) {
    Vocabulary v;
    v.add("promo");
    v.add("phone");
    Rng init(5 + layers);
    auto p = init_ctw_params(v.size(), tiny(layers), init);
    const std::vector<TermWeightExample> batch{{Query{{1, 2}, "promo phone"}, {0.0, 1.0}}};

    auto g = zeros_like(p);
    Rng r(11);
    ctw_loss(batch, p, Mode::train, r, &g);

    Rng sample(1);
    const auto extended = finite_diff_check(
        [&] {
          Rng rr(11);
          std::vector<long double> terms;
          ctw_loss_extended(batch, p, Mode::train, rr, &terms);
          return terms;
        },
        collect_params(p), collect_params(g), sample);
    CHECK_MESSAGE(extended.passed(), extended.max_relative_error);
  }
}

TEST_CASE("production and extended losses agree") {
  Vocabulary v;
  const auto pairs = toy_corpus(v);
  Rng init(3);
  const auto ctw = init_ctw_params(v.size(), tiny(), init);
  const auto cqr = init_cqr_params(v.size(), tiny(), init);
  std::vector<TermWeightExample> wb;
  std::vector<RefinementExample> rb;
  for (const auto& p : pairs) {
    wb.push_back(make_weight_example(p));
    rb.push_back(make_refinement_example(p, v));
  }
  for (Mode mode : {Mode::eval, Mode::train}) {
    Rng a(4);
    Rng b(4);
    const long double x = ctw_loss(wb, ctw, mode, a, nullptr);
    const long double y = ctw_loss_extended(wb, ctw, mode, b);
    CHECK(std::abs(static_cast<double>((x - y) / y)) < 1e-12);
    Rng c(4);
    Rng d(4);
    const long double s = cqr_loss(rb, cqr, mode, c, nullptr);
    const long double t = cqr_loss_extended(rb, cqr, mode, d);
    CHECK(std::abs(static_cast<double>((s - t) / t)) < 1e-12);
  }
}

TEST_CASE("cqr labels are the in-vocabulary terms of the reformulation") {
  Vocabulary v;
  const auto pair = make_pair("promo code for motorola phone", "motorola phone on sale", v);
  const auto ex = make_refinement_example(pair, v);
  std::vector<TermId> expected{v.lookup("motorola"), v.lookup("phone"), v.lookup("on"), v.lookup("sale")};
  std::sort(expected.begin(), expected.end());
  CHECK(ex.positives == expected);

  Vocabulary small;
  small.add("motorola");
  const auto oov = make_refinement_example(make_pair("a b c", "zzz motorola", small, VocabMode::frozen), small);
  CHECK(oov.positives == std::vector<TermId>{small.lookup("motorola")});
}

TEST_CASE("cqr loss hand cases") {
  Vocabulary v;
  v.add("motorola");
  v.add("phone");
  Rng rng(1);
  auto p = init_cqr_params(v.size(), tiny(), rng);

  SUBCASE("two labels at one half") {
    zero_output(p.head.w2, p.head.b2);
    const std::vector<RefinementExample> batch{{Query{{1}, "motorola"}, {1}}};
    Rng r(0);
    CHECK(static_cast<double>(cqr_loss(batch, p, Mode::eval, r, nullptr)) == doctest::Approx(2 * std::log(2.0)));
  }
  SUBCASE("no positives") {
    const Query q{{2, 1}, "phone motorola"};
    const std::vector<RefinementExample> batch{{q, {}}};
    const auto s = refinement_scores(q, p);
    double expected = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      expected -= std::log(1.0 - s[i]);
    }
    Rng r(0);
    CHECK(static_cast<double>(cqr_loss(batch, p, Mode::eval, r, nullptr)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("cqr with a zero output layer ranks by id") {
  Vocabulary v;
  for (const char* t : {"d", "c", "b", "a", "e"}) {
    v.add(t);
  }
  Rng rng(1);
  auto p = init_cqr_params(v.size(), tiny(), rng);
  zero_output(p.head.w2, p.head.b2);
  const auto top = predict_refinements(Query{{2}, "c"}, p, v, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].id == 1);
  CHECK(top[1].id == 2);
  CHECK(top[2].id == 3);
  for (const auto& s : top) {
    CHECK(s.score == 0.5);
  }
  CHECK_THROWS(predict_refinements(Query{{2}, "c"}, p, v, 6));
}

TEST_CASE("cqr gradients match finite differences") {
  Vocabulary v;
  for (const char* t : {"orbit", "gum", "hose", "garden", "red"}) {
    v.add(t);
  }
  Rng init(8);
  auto p = init_cqr_params(v.size(), tiny(), init);
  const std::vector<RefinementExample> batch{{Query{{1, 3}, "orbit hose"}, {3, 4}},
                                             {Query{{2}, "gum"}, {1, 2}}};
  auto g = zeros_like(p);
  Rng r(21);
  cqr_loss(batch, p, Mode::train, r, &g);
  Rng sample(2);
  const auto report = finite_diff_check(
      [&] {
        Rng rr(21);
        std::vector<long double> terms;
        cqr_loss_extended(batch, p, Mode::train, rr, &terms);
        return terms;
      },
      collect_params(p), collect_params(g), sample);
  CHECK_MESSAGE(report.passed(), report.max_relative_error);
}

TEST_CASE("training is deterministic and round trips through json") {
  Vocabulary v;
  const auto pairs = toy_corpus(v);
  const auto stop = StopWords::english_default();
  const auto cfg = tiny();

  const auto a = train_ctw(pairs, pairs, v, stop, cfg);
  const auto b = train_ctw(pairs, pairs, v, stop, cfg);
  CHECK(ctw_to_json(a).dump() == ctw_to_json(b).dump());
  CHECK(a.trace.epoch_loss.size() == cfg.epochs);
  const auto back = ctw_from_json(ctw_to_json(a));
  CHECK(back.weigh("promo code for motorola phone") == a.weigh("promo code for motorola phone"));
  CHECK(ctw_to_json(back).dump() == ctw_to_json(a).dump());

  const auto c = train_cqr(pairs, pairs, v, stop, cfg);
  const auto d = train_cqr(pairs, pairs, v, stop, cfg);
  CHECK(cqr_to_json(c).dump() == cqr_to_json(d).dump());
  const auto cback = cqr_from_json(cqr_to_json(c));
  CHECK(cqr_to_json(cback).dump() == cqr_to_json(c).dump());
  CHECK(cback.refine("orbit gum", 3).size() == 3);

  auto other = cfg;
  other.seed = 2;
  CHECK(ctw_to_json(train_ctw(pairs, pairs, v, stop, other)).dump() != ctw_to_json(a).dump());
}

TEST_CASE("model files reject the wrong type") {
  Vocabulary v;
  const auto pairs = toy_corpus(v);
  const auto stop = StopWords::english_default();
  auto cfg = tiny();
  cfg.epochs = 1;
  const auto j = ctw_to_json(train_ctw(pairs, {}, v, stop, cfg));
  CHECK_THROWS(cqr_from_json(j));
  auto future = j;
  future["format_version"] = 999;
  CHECK_THROWS(ctw_from_json(future));
}

TEST_CASE("run config presets and overrides") {
  const auto full = preset_config("full");
  CHECK(full.embedding_dim == 300);
  CHECK(full.hidden == 256);
  CHECK(full.layers == 2);
  CHECK(full.dropout == 0.25);
  CHECK(full.learning_rate == 0.001);
  CHECK(full.batch_size == 512);
  CHECK_THROWS(preset_config("laptop"));
  const auto cfg = run_config_from_json({{"preset", "desk"}, {"epochs", 4}});
  CHECK(cfg.epochs == 4);
  CHECK(cfg.hidden == preset_config("desk").hidden);
  CHECK(run_config_from_json(to_json(full)).hidden == 256);
  auto bad = full;
  bad.dropout = 1.5;
  CHECK_THROWS(bad.validate());
  CHECK(full.resolved_cqr_hidden(100) == 200);
  CHECK(preset_config("desk").resolved_cqr_hidden(1000) == 512);
}
