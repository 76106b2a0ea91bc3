// Runs the acceptance criteria and prints one PASS/FAIL line for each.
// Usage: acceptance [criterion ...]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qintent/gradcheck_suite.hpp"
#include "qintent/pipeline.hpp"

using namespace qintent;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// --- shared synthetic runs ----------------------------------------------------

std::map<std::uint64_t, SyntheticExperiment> experiments;
std::map<std::uint64_t, CtwModel> ctw_models;
std::map<std::uint64_t, CqrModel> cqr_models;

const SyntheticExperiment& experiment(std::uint64_t seed) {
  auto it = experiments.find(seed);
  if (it == experiments.end()) {
    it = experiments.emplace(seed, prepare_synthetic(default_synth_spec(), seed)).first;
  }
  return it->second;
}

RunConfig desk(std::uint64_t seed) {
  auto cfg = preset_config("desk");
  cfg.seed = seed;
  return cfg;
}

const CtwModel& ctw(std::uint64_t seed) {
  auto it = ctw_models.find(seed);
  if (it == ctw_models.end()) {
    const auto& ex = experiment(seed);
    it = ctw_models.emplace(seed, train_ctw(ex.train, ex.validation, ex.vocab, ex.stopwords, desk(seed))).first;
  }
  return it->second;
}

// Nothing in training depends on the epoch budget except the loop bound, so
// the first epochs of this run are those of a default run.
constexpr std::size_t kCqrEpochs = 40;

const CqrModel& cqr(std::uint64_t seed) {
  auto it = cqr_models.find(seed);
  if (it == cqr_models.end()) {
    const auto& ex = experiment(seed);
    auto cfg = desk(seed);
    cfg.epochs = kCqrEpochs;
    it = cqr_models.emplace(seed, train_cqr(ex.train, ex.validation, ex.vocab, ex.stopwords, cfg)).first;
  }
  return it->second;
}

// --- 1 ------------------------------------------------------------------------

Outcome gradients() {
  Stopwatch clock;
  const auto cases = run_gradcheck_suite({11, 12, 13, 14, 15});
  const double elapsed = clock.seconds();
  std::map<std::string, double> worst{{"encoder", 0.0}, {"ctw_head", 0.0}, {"cqr_head", 0.0}};
  std::map<std::string, std::size_t> seen;
  bool ok = cases.size() == 5;
  for (const auto& c : cases) {
    ok = ok && c.passed();
    for (const auto& g : c.groups) {
      worst[g.name] = std::max(worst[g.name], g.max_relative_error);
      seen[g.name] += g.coordinates;
    }
  }
  for (const auto& [name, err] : worst) {
    ok = ok && seen[name] > 0 && err < 1e-4;
  }
  ok = ok && elapsed < 60.0;
  return {ok, fmt("max rel err encoder %.2e, ctw %.2e, cqr %.2e; %zu seeds in %.1f s", worst["encoder"],
                  worst["ctw_head"], worst["cqr_head"], cases.size(), elapsed)};
}

// --- 2 ------------------------------------------------------------------------

std::vector<oracle::TextPair> random_corpus(Rng& rng) {
  const std::size_t vocab = 3 + rng.below(40);
  auto word = [&] {
    // Skewed towards low ids.
    const double u = rng.uniform();
    return "w" + std::to_string(static_cast<std::size_t>(u * u * static_cast<double>(vocab)));
  };
  auto text = [&] {
    std::string s = word();
    for (std::size_t n = rng.below(6); n > 0; --n) {
      s += " " + word();
    }
    return s;
  };
  std::vector<oracle::TextPair> out(1 + rng.below(1000));
  for (auto& p : out) {
    p.q = text();
    p.rq = rng.bernoulli(0.5) ? text() : p.q.substr(0, p.q.find(' ')) + " " + text();
  }
  return out;
}

Outcome counting_oracles() {
  Stopwatch clock;
  Rng rng(2024);
  std::size_t mismatches = 0;
  std::size_t weights = 0;
  std::size_t scores = 0;
  for (int c = 0; c < 100; ++c) {
    const auto corpus = random_corpus(rng);
    const auto split = oracle::split_corpus(corpus);
    std::vector<ReformulationPair> pairs;
    std::set<std::string> terms{"unseen"};
    for (const auto& t : corpus) {
      ReformulationPair p;
      p.q.raw = t.q;
      p.rq.raw = t.rq;
      pairs.push_back(std::move(p));
      for (const auto& w : oracle::words(t.q)) {
        terms.insert(w);
      }
    }
    const auto ftw = ftw_fit(pairs);
    for (const auto& t : terms) {
      const auto [retained, occurred] = oracle::retention(split, t);
      const double want = occurred == 0 ? FtwModel::kUnseenWeight
                                        : static_cast<double>(retained) / static_cast<double>(occurred);
      mismatches += ftw.weight(t) != want ? 1 : 0;
      ++weights;
    }
    const auto fqr = fqr_fit(pairs);
    const std::vector<std::string> pool(terms.begin(), terms.end());
    for (int k = 0; k < 5; ++k) {
      std::vector<std::string> q;
      for (std::size_t n = 1 + rng.below(6); n > 0; --n) {
        q.push_back(pool[rng.below(pool.size())]);
      }
      const auto got = fqr.scores(q);
      const auto want = oracle::refinement(split, q);
      if (got.size() != want.size()) {
        ++mismatches;
        continue;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        mismatches += got[i].term != want[i].term || got[i].score != oracle::to_double(want[i].score) ? 1 : 0;
        ++scores;
      }
    }
  }
  const double elapsed = clock.seconds();
  return {mismatches == 0 && elapsed < 30.0,
          fmt("%zu FTW weights and %zu FQR scores over 100 corpora, %zu mismatches, %.1f s", weights, scores,
              mismatches, elapsed)};
}

// --- 3 ------------------------------------------------------------------------

Outcome filter_fidelity() {
  Rng rng(77);
  Vocabulary vocab;
  std::vector<std::string> names;
  for (int i = 0; i < 14; ++i) {
    names.push_back("t" + std::to_string(i));
    // Frequencies straddle the default threshold of 100.
    const std::uint64_t freq = i < 9 ? 101 + rng.below(50) : (i == 9 ? 100 : 1 + rng.below(100));
    for (std::uint64_t f = 0; f < freq; ++f) {
      vocab.add(names.back());
    }
  }
  // Families of four related queries: a base and three one-term edits.
  std::vector<std::vector<std::string>> queries;
  for (int f = 0; f < 20; ++f) {
    std::vector<std::string> base;
    for (std::size_t n = 1 + rng.below(5); n > 0; --n) {
      base.push_back(names[rng.below(names.size())]);
    }
    queries.push_back(base);
    for (int v = 0; v < 3; ++v) {
      auto q = base;
      const auto edit = rng.below(3);
      if (edit == 0 || q.size() == 1) {
        q.insert(q.begin() + static_cast<std::ptrdiff_t>(rng.below(q.size() + 1)), names[rng.below(names.size())]);
      } else if (edit == 1) {
        q.erase(q.begin() + static_cast<std::ptrdiff_t>(rng.below(q.size())));
      } else {
        q[rng.below(q.size())] = names[rng.below(names.size())];
      }
      queries.push_back(q);
    }
  }
  QueryStats stats;
  const std::uint64_t counts[] = {0, 1, 150, 299, 300, 301, 1000};
  const double ctrs[] = {0.0, 0.01, 0.049, 0.05, 0.051, 0.5};
  for (const auto& q : queries) {
    if (rng.bernoulli(0.9)) {
      stats.set(oracle::join(q), {counts[rng.below(7)], ctrs[rng.below(6)]});
    }
  }

  std::vector<SessionEvent> events;
  for (int s = 0; s < 10000; ++s) {
    const std::string session = "s" + std::to_string(s);
    const std::size_t family = 4 * rng.below(queries.size() / 4);
    std::size_t last = family;
    for (std::size_t e = 1 + rng.below(8); e > 0; --e) {
      if (!rng.bernoulli(0.3)) {
        last = rng.bernoulli(0.85) ? family + rng.below(4) : rng.below(queries.size());
      }
      SessionEvent ev;
      ev.session = session;
      ev.timestamp = static_cast<std::int64_t>(rng.below(6));
      for (const auto& t : queries[last]) {
        ev.query.terms.push_back(*vocab.find(t));
      }
      ev.query.raw = oracle::join(queries[last]);
      const auto kind = rng.below(3);
      ev.engagement = kind == 0 ? Engagement::none : (kind == 1 ? Engagement::click : Engagement::atc);
      if (ev.engagement != Engagement::none) {
        ev.product = "p" + std::to_string(rng.below(20));
      }
      if (rng.bernoulli(0.03)) {
        ev.product = ev.product ? std::nullopt : std::optional<std::string>("p0");
      }
      if (rng.bernoulli(0.01)) {
        ev.query.terms.clear();
        ev.query.raw.clear();
      }
      events.push_back(std::move(ev));
    }
  }
  // Interleave sessions.
  rng.shuffle(std::span<SessionEvent>(events));

  std::vector<FilterConfig> configs(2);
  configs[1].max_intermediate = 0;
  configs[1].min_jaccard = 0.5;
  configs[1].min_query_len = 2;
  std::size_t emitted = 0;
  std::size_t violations = 0;
  for (const auto& cfg : configs) {
    const auto got = extract_pairs(events, stats, cfg, vocab);
    std::map<std::string, std::vector<SessionEvent>> by_session;
    for (const auto& e : events) {
      by_session[e.session].push_back(e);
    }
    std::vector<oracle::Emitted> want;
    for (auto& [_, evs] : by_session) {
      const auto st = oracle::steps(evs, vocab);
      for (auto& p : oracle::expected_pairs(st, stats, cfg, vocab)) {
        want.push_back(std::move(p));
      }
    }
    // Every emitted pair must also be among the oracle's, in order.
    const std::size_t n = std::max(got.size(), want.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= got.size() || i >= want.size()) {
        ++violations;
        continue;
      }
      const oracle::Emitted e{got[i].q.raw, got[i].rq.raw, got[i].product};
      violations += e == want[i] ? 0 : 1;
    }
    emitted += got.size();
  }
  return {violations == 0 && emitted > 0,
          fmt("10000 fuzzed sessions, two filter configs, %zu pairs emitted, %zu violations", emitted, violations)};
}

// --- 4 ------------------------------------------------------------------------

Outcome weighting_order() {
  Stopwatch clock;
  bool ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto& ex = experiment(seed);
    const auto ftw = ftw_fit(ex.train);
    const auto tfidf = tfidf_fit(ex.train);
    const double a_ctw = evaluate_weighting(ex.test, weight_fn(ctw(seed)), ex.stopwords, "ctw").summary.ap_nnz;
    const double a_ftw = evaluate_weighting(ex.test, weight_fn(ftw), ex.stopwords, "ftw").summary.ap_nnz;
    const double a_tfidf = evaluate_weighting(ex.test, weight_fn(tfidf), ex.stopwords, "tfidf").summary.ap_nnz;
    ok = ok && ex.vocab.size() <= 500 && ex.train.size() >= 5000 && a_ctw >= a_ftw + 0.03 && a_ftw > a_tfidf;
    detail += fmt("seed %llu: ctw %.4f ftw %.4f tfidf %.4f (|V| %zu, train %zu); ", static_cast<unsigned long long>(seed),
                  a_ctw, a_ftw, a_tfidf, ex.vocab.size(), ex.train.size());
  }
  const double elapsed = clock.seconds();
  return {ok && elapsed < 600.0, detail + fmt("%.0f s", elapsed)};
}

// --- 5 ------------------------------------------------------------------------

Outcome refinement_order() {
  Stopwatch clock;
  bool ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto& ex = experiment(seed);
    const auto fqr = fqr_fit(ex.train);
    const double a_cqr = evaluate_refinement(ex.test, refine_fn(cqr(seed)), ex.stopwords, "cqr").summary.ap_nnz;
    const double a_fqr = evaluate_refinement(ex.test, refine_fn(fqr), ex.stopwords, "fqr").summary.ap_nnz;
    ok = ok && a_cqr >= a_fqr + 0.02;
    detail += fmt("seed %llu: cqr %.4f fqr %.4f; ", static_cast<unsigned long long>(seed), a_cqr, a_fqr);
  }
  const double elapsed = clock.seconds();
  return {ok && elapsed < 600.0, detail + fmt("%zu epochs, %.0f s", kCqrEpochs, elapsed)};
}

// --- 6 ------------------------------------------------------------------------

Outcome ranking_boost() {
  bool ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto& ex = experiment(seed);
    const auto index = Bm25fIndex::build(ex.synth.catalog);
    const auto oracle = evaluate_ranking(ex.test, index, oracle_weights, "oracle");
    const auto learned = evaluate_ranking(ex.test, index, weight_fn(ctw(seed)), "ctw");
    std::size_t differing = 0;
    for (double c : {1.0, 0.3, 7.0}) {
      const WeightFn uniform = [c](const ReformulationPair& p) {
        return std::vector<double>(tokenize_text(p.q.raw).size(), c);
      };
      const auto flat = evaluate_ranking(ex.test, index, uniform, "uniform");
      for (const auto& r : flat.ranking) {
        differing += r.rr_boosted != r.rr_unboosted ? 1 : 0;
      }
      differing += flat.mrr_ratio != 1.0 ? 1 : 0;
    }
    ok = ok && ex.synth.catalog.size() >= 500 && oracle.mrr_ratio > 1.05 && learned.mrr_ratio > 1.0 && differing == 0;
    detail += fmt("seed %llu: oracle %.4f ctw %.4f uniform diffs %zu (catalog %zu); ",
                  static_cast<unsigned long long>(seed), oracle.mrr_ratio, learned.mrr_ratio, differing,
                  ex.synth.catalog.size());
  }
  return {ok, detail};
}

// --- 7 ------------------------------------------------------------------------

// Two-sided Student t tail probabilities with closed forms for 1 to 4
// degrees of freedom.
double t_tail(double t, int dof) {
  t = std::abs(t);
  const double pi = std::numbers::pi;
  switch (dof) {
    case 1:
      return 1.0 - 2.0 / pi * std::atan(t);
    case 2:
      return 1.0 - t / std::sqrt(t * t + 2.0);
    case 3: {
      const double x = t / std::sqrt(3.0);
      return 1.0 - 2.0 / pi * (x / (1.0 + x * x) + std::atan(x));
    }
    default: {
      const double x = t / std::sqrt(1.0 + t * t / 4.0);
      return 1.0 - 0.75 * x * (1.0 - t * t / (12.0 * (1.0 + t * t / 4.0)));
    }
  }
}

Outcome metric_oracles() {
  const auto stop = StopWords::english_default();
  std::size_t checks = 0;
  std::size_t failures = 0;
  auto expect = [&](bool c) {
    ++checks;
    failures += c ? 0 : 1;
  };

  // Worked example: nnz 2 for weighting, 3 for refinement.
  const auto q = tokenize_text("promo code for motorola phone");
  const auto rq = tokenize_text("motorola phone on sale");
  const auto kept = retained_terms(q, rq);
  const std::set<std::string> refined(rq.begin(), rq.end());
  expect(nnz(kept, stop) == 2);
  expect(nnz(refined, stop) == 3);
  expect(precision_at_k(std::vector<std::string>{"motorola", "phone", "promo"}, kept, 2, stop) == 1.0);
  expect(precision_at_k(std::vector<std::string>{"sale", "on", "case", "phone"}, refined, 3, stop) == 2.0 / 3.0);

  Rng rng(5);
  const std::vector<std::string> pool{"a", "b", "c", "d", "e", "for", "the", "on"};
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::string> ranked;
    for (std::size_t n = rng.below(8); n > 0; --n) {
      ranked.push_back(pool[rng.below(pool.size())]);
    }
    const auto& target = pool[rng.below(pool.size())];
    double rr = 0.0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      if (ranked[k] == target) {
        rr = 1.0 / static_cast<double>(k + 1);
        break;
      }
    }
    expect(reciprocal_rank(ranked, target) == rr);

    std::set<std::string> truth;
    for (std::size_t n = rng.below(4); n > 0; --n) {
      truth.insert(pool[rng.below(pool.size())]);
    }
    std::size_t content = 0;
    for (const auto& t : truth) {
      content += stop.contains(t) ? 0 : 1;
    }
    const std::size_t k = 1 + rng.below(4);
    std::size_t taken = 0;
    std::size_t hits = 0;
    for (const auto& t : ranked) {
      if (taken == k) {
        break;
      }
      if (!stop.contains(t)) {
        ++taken;
        hits += truth.contains(t) && !stop.contains(t) ? 1 : 0;
      }
    }
    const auto p = precision_at_k(ranked, truth, k, stop);
    if (content == 0) {
      expect(!p.has_value());
    } else {
      expect(p.has_value() && *p == static_cast<double>(hits) / static_cast<double>(k));
    }

    std::vector<std::string> a(ranked.begin(), ranked.end());
    std::vector<std::string> b(truth.begin(), truth.end());
    if (!a.empty() && !b.empty()) {
      const double want = oracle::jaccard(a, b);
      expect(jaccard(std::span<const std::string>(a), std::span<const std::string>(b)) == want);
    }
  }
  expect(jaccard(std::vector<std::string>{"red", "garden", "hose"}, std::vector<std::string>{"garden", "hose", "reel"}) ==
         0.5);

  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const int n = 2 + static_cast<int>(rng.below(4));
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) {
      y[j] = rng.uniform();
      x[j] = y[j] + rng.uniform(-0.5, 1.0);
    }
    double mean = 0.0;
    for (int j = 0; j < n; ++j) {
      mean += x[j] - y[j];
    }
    mean /= n;
    double ss = 0.0;
    for (int j = 0; j < n; ++j) {
      ss += (x[j] - y[j] - mean) * (x[j] - y[j] - mean);
    }
    const double t = mean / std::sqrt(ss / (n - 1) / n);
    const auto r = paired_t_test(x, y);
    worst = std::max(worst, std::abs(r.p - t_tail(t, n - 1)));
    expect(std::abs(r.t - t) <= 1e-9 * std::max(1.0, std::abs(t)) && r.dof == n - 1);
    expect(std::abs(r.p - t_tail(t, n - 1)) < 1e-6);
  }
  return {failures == 0, fmt("%zu checks, %zu failures, worst t-test p error %.1e", checks, failures, worst)};
}

// --- 8 ------------------------------------------------------------------------

Outcome bm25f_properties() {
  std::size_t checks = 0;
  std::size_t failures = 0;
  auto expect = [&](bool c) {
    ++checks;
    failures += c ? 0 : 1;
  };

  Bm25fParams title_only;
  title_only.fields[1].weight = 0.0;
  title_only.fields[0].weight = 1.0;
  const auto single = Bm25fIndex::build(std::vector<CatalogDocument>{{"p", "phone", ""}}, title_only);
  // idf = ln(1 + (N − df + 0.5) / (df + 0.5)), tf saturation tf / (k1 + tf).
  const double closed = std::log(1.0 + 0.5 / 1.5) * 1.0 / (1.2 + 1.0);
  expect(std::abs(single.term_score("phone", 0) - closed) < 1e-6);
  expect(std::abs(closed - 0.1308) < 1e-4);

  Rng rng(8);
  const std::vector<std::string> words{"hose", "lamp", "light", "timer", "red", "garden", "night", "phone", "case",
                                       "paint", "nozzle", "glow"};
  auto sentence = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      s += (s.empty() ? "" : " ") + words[rng.below(words.size())];
    }
    return s;
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CatalogDocument> docs;
    for (int d = 0; d < 12; ++d) {
      docs.push_back({"d" + std::to_string(d), sentence(2 + rng.below(5)), sentence(3 + rng.below(8))});
    }
    const auto& term = words[rng.below(words.size())];
    const std::size_t target = rng.below(docs.size());

    // tf: one more occurrence raises the score.
    auto more = docs;
    const double before = Bm25fIndex::build(more).term_score(term, target);
    (rng.bernoulli(0.5) ? more[target].title : more[target].description) += " " + term;
    expect(Bm25fIndex::build(more).term_score(term, target) > before);

    // df: another document gains the term at equal length.
    auto wider = docs;
    wider[target].title += " " + term;
    const auto base = Bm25fIndex::build(wider);
    for (std::size_t d = 0; d < wider.size(); ++d) {
      if (base.term_score(term, d) == 0.0) {
        auto spread = wider;
        auto toks = tokenize_text(spread[d].title);
        toks[0] = term;
        spread[d].title = oracle::join(toks);
        expect(Bm25fIndex::build(spread).term_score(term, target) < base.term_score(term, target));
        break;
      }
    }
  }

  // Uniform scaling of the boost weights leaves the ranking bit-identical.
  const auto& ex = experiment(1);
  const auto index = Bm25fIndex::build(ex.synth.catalog);
  std::size_t queries = 0;
  for (const auto& p : ex.test) {
    const auto terms = tokenize_text(p.q.raw);
    const auto plain = rank(terms, index, std::nullopt, index.document_count());
    for (double c : {1.0, 0.1, 0.3, 3.0, 1e-3, 12345.678}) {
      const std::vector<double> w(terms.size(), c);
      const auto boosted = rank(terms, index, std::span<const double>(w), index.document_count());
      bool same = boosted.size() == plain.size();
      for (std::size_t i = 0; same && i < plain.size(); ++i) {
        same = boosted[i].product == plain[i].product;
      }
      expect(same);
    }
    ++queries;
  }
  return {failures == 0, fmt("%zu checks (%zu scaled queries), %zu failures", checks, queries, failures)};
}

// --- 9 ------------------------------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const std::vector<std::string> commands{
      "synth --out-dir d --sessions 15000 --seed 4",
      "extract --sessions d/sessions.jsonl --stats d/query_stats.jsonl --out pairs.jsonl",
      "split --pairs pairs.jsonl --out-dir s --seed 4",
      "train ctw --train s/train.jsonl --validation s/validation.jsonl --preset desk --epochs 3 --seed 4 --quiet "
      "--out ctw.json",
      "train cqr --train s/train.jsonl --validation s/validation.jsonl --preset desk --epochs 2 --seed 4 --quiet "
      "--out cqr.json",
      "fit ftw --train s/train.jsonl --out ftw.json",
      "fit fqr --train s/train.jsonl --out fqr.json",
      "fit tfidf --train s/train.jsonl --out tfidf.json",
      "fit vpcg --train s/train.jsonl --dim 8 --sgd-epochs 20 --seed 4 --out vpcg.json",
      "index --catalog d/catalog.jsonl --out index.json",
      "weigh --model ctw.json --query 'battery night light with timer' --normalize",
      "refine --model cqr.json --query 'outdoor paint' --k 10",
      "rank --index index.json --model ctw.json --query 'battery night light with timer' --k 10",
      "eval weighting --model ctw.json --model ftw.json --model vpcg.json --pairs s/test.jsonl --oracle "
      "--significance 0.05 --json weighting.json",
      "eval refinement --model cqr.json --model fqr.json --pairs s/test.jsonl --json refinement.json",
      "eval ranking --model ctw.json --model tfidf.json --pairs s/test.jsonl --index index.json --oracle "
      "--json ranking.json",
  };
  const fs::path root = fs::temp_directory_path() / ("qintent_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / run);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const std::string cmd = "cd '" + (root / run).string() + "' && " + QINTENT_BIN + " " + commands[i] + " > out" +
                              std::to_string(i) + ".txt 2>/dev/null";
      const int code = shell(cmd);
      // Significance may legitimately fail; every other command must succeed.
      if (code != 0 && code != 5) {
        fs::remove_all(root);
        return {false, fmt("command %zu exited %d: %s", i, code, commands[i].c_str())};
      }
    }
  }
  std::size_t files = 0;
  std::size_t differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const auto rel = fs::relative(entry.path(), root / "a");
    ++files;
    differing += slurp(entry.path()) != slurp(root / "b" / rel) ? 1 : 0;
  }
  fs::remove_all(root);
  return {differing == 0 && files > commands.size(),
          fmt("%zu commands run twice, %zu files compared, %zu differ", commands.size(), files, differing)};
}

// --- 10 -----------------------------------------------------------------------

Outcome training_dynamics() {
  bool ok = true;
  std::string detail;
  auto check = [&](const char* name, std::uint64_t seed, const std::vector<double>& loss) {
    bool mono = loss.size() >= 5;
    for (std::size_t e = 1; mono && e < 5; ++e) {
      mono = loss[e] <= loss[e - 1];
    }
    ok = ok && mono;
    detail += fmt("%s seed %llu:", name, static_cast<unsigned long long>(seed));
    for (std::size_t e = 0; e < std::min<std::size_t>(5, loss.size()); ++e) {
      detail += fmt(" %.3f", loss[e]);
    }
    detail += "; ";
  };
  for (auto seed : kSeeds) {
    check("ctw", seed, ctw(seed).trace.epoch_loss);
    check("cqr", seed, cqr(seed).trace.epoch_loss);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"counting-oracle equivalence", counting_oracles},
      {"filter fidelity", filter_fidelity},
      {"weighting order ctw > ftw > tfidf", weighting_order},
      {"refinement order cqr > fqr", refinement_order},
      {"ranking boost", ranking_boost},
      {"metric oracles", metric_oracles},
      {"bm25f properties", bm25f_properties},
      {"determinism", determinism},
      {"training dynamics", training_dynamics},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    selected.insert(static_cast<std::size_t>(std::stoul(argv[i])));
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const std::size_t id = i + 1;
    if (!selected.empty() && !selected.contains(id)) {
      continue;
    }
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    while (o.detail.ends_with(' ') || o.detail.ends_with(';')) {
      o.detail.pop_back();
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
