#include "qintent/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "qintent/errors.hpp"
#include "qintent/model_io.hpp"

namespace qintent {

using nlohmann::json;

namespace {

using U128 = unsigned __int128;

U128 gcd128(U128 a, U128 b) {
  while (b != 0) {
    const U128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool lcm_checked(U128 a, U128 b, U128& out) {
  return !__builtin_mul_overflow(a / gcd128(a, b), b, &out);
}

std::set<std::string> distinct_tokens(const std::string& raw) {
  const auto tokens = tokenize_text(raw);
  return {tokens.begin(), tokens.end()};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void normalize(Vector& v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm > 0.0) {
    for (auto& x : v) {
      x /= norm;
    }
  }
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto end = std::min(s.find(' ', start), s.size());
    if (end > start) {
      out.push_back(s.substr(start, end - start));
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

// --- FTW --------------------------------------------------------------------

double FtwModel::weight(std::string_view term) const {
  const auto it = counts.find(term);
  if (it == counts.end() || it->second.occurred == 0) {
    return kUnseenWeight;
  }
  return static_cast<double>(it->second.retained) / static_cast<double>(it->second.occurred);
}

std::vector<double> FtwModel::weigh(std::span<const std::string> terms) const {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    out.push_back(weight(t));
  }
  return out;
}

FtwModel ftw_fit(std::span<const ReformulationPair> pairs) {
  FtwModel m;
  for (const auto& pair : pairs) {
    const auto target = distinct_tokens(pair.rq.raw);
    for (const auto& t : distinct_tokens(pair.q.raw)) {
      auto& c = m.counts[t];
      ++c.occurred;
      if (target.contains(t)) {
        ++c.retained;
      }
    }
  }
  return m;
}

// --- FQR --------------------------------------------------------------------

std::vector<RefinementScore> FqrModel::scores(std::span<const std::string> query_terms) const {
  struct Source {
    std::uint64_t occurrences;
    const std::map<std::string, std::uint64_t>* row;
  };
  std::vector<Source> sources;
  const std::set<std::string> distinct(query_terms.begin(), query_terms.end());
  for (const auto& u : distinct) {
    const auto occ = occurrences.find(u);
    const auto row = cooccurrence.find(u);
    if (occ != occurrences.end() && row != cooccurrence.end() && occ->second > 0) {
      sources.push_back({occ->second, &row->second});
    }
  }

  // Scores are sums of count ratios. Over a common denominator they become
  // integers, so equal scores compare equal and convert to the same double.
  U128 denom = 1;
  bool exact = true;
  for (const auto& s : sources) {
    exact = exact && lcm_checked(denom, s.occurrences, denom);
  }
  std::map<std::string, U128> numer;
  std::map<std::string, long double> approx;
  for (const auto& s : sources) {
    const U128 factor = exact ? denom / s.occurrences : 0;
    for (const auto& [v, count] : *s.row) {
      approx[v] += static_cast<long double>(count) / static_cast<long double>(s.occurrences);
      if (exact) {
        U128 term = 0;
        exact = !__builtin_mul_overflow(factor, static_cast<U128>(count), &term) &&
                !__builtin_add_overflow(numer[v], term, &numer[v]);
      }
    }
  }

  struct Ranked {
    std::string term;
    U128 numer;
    long double approx;
  };
  std::vector<Ranked> ranked;
  for (const auto& [v, a] : approx) {
    const U128 n = exact ? numer[v] : 0;
    if (exact ? n > 0 : a > 0.0L) {
      ranked.push_back({v, n, a});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [exact](const Ranked& a, const Ranked& b) {
    return exact ? a.numer > b.numer : a.approx > b.approx;
  });
  std::vector<RefinementScore> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) {
    double score = static_cast<double>(r.approx);
    if (exact) {
      const U128 g = gcd128(r.numer, denom);
      score = static_cast<double>(r.numer / g) / static_cast<double>(denom / g);
    }
    out.push_back({r.term, score});
  }
  return out;
}

FqrModel fqr_fit(std::span<const ReformulationPair> pairs) {
  FqrModel m;
  for (const auto& pair : pairs) {
    const auto target = distinct_tokens(pair.rq.raw);
    for (const auto& u : distinct_tokens(pair.q.raw)) {
      ++m.occurrences[u];
      auto& row = m.cooccurrence[u];
      for (const auto& v : target) {
        ++row[v];
      }
    }
  }
  return m;
}

// --- TF-IDF -----------------------------------------------------------------

double TfidfModel::idf(std::string_view term) const {
  const auto it = df.find(term);
  const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((static_cast<double>(documents) + 1.0) / (d + 1.0)) + 1.0;
}

std::vector<double> TfidfModel::weigh(std::span<const std::string> terms) const {
  std::map<std::string_view, std::size_t> tf;
  for (const auto& t : terms) {
    ++tf[t];
  }
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    out.push_back(static_cast<double>(tf[t]) * idf(t));
  }
  return out;
}

TfidfModel tfidf_fit(std::span<const ReformulationPair> pairs) {
  TfidfModel m;
  m.documents = pairs.size();
  for (const auto& pair : pairs) {
    for (const auto& t : distinct_tokens(pair.q.raw)) {
      ++m.df[t];
    }
  }
  return m;
}

// --- VPCG & VG ----------------------------------------------------------------

std::vector<ClickEdge> click_graph(std::span<const ReformulationPair> pairs) {
  std::map<std::pair<std::string, std::string>, double> acc;
  for (const auto& pair : pairs) {
    if (!pair.product || pair.product->empty()) {
      continue;
    }
    acc[{normalize_query(pair.rq.raw), *pair.product}] += 1.0;
  }
  std::vector<ClickEdge> out;
  out.reserve(acc.size());
  for (const auto& [key, clicks] : acc) {
    out.push_back({key.first, key.second, clicks});
  }
  return out;
}

std::vector<std::string> query_ngrams(std::span<const std::string> terms) {
  std::vector<std::string> out(terms.begin(), terms.end());
  for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
    out.push_back(terms[i] + " " + terms[i + 1]);
  }
  return out;
}

void vpcg_sweep(std::span<const ClickEdge> edges, std::map<std::string, Vector, std::less<>>& queries,
                std::map<std::string, Vector, std::less<>>& products) {
  for (auto& [_, v] : products) {
    std::fill(v.begin(), v.end(), 0.0);
  }
  for (const auto& e : edges) {
    const auto& q = queries.at(e.query);
    auto& p = products.at(e.product);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] += e.clicks * q[i];
    }
  }
  for (auto& [_, v] : products) {
    normalize(v);
  }
  for (auto& [_, v] : queries) {
    std::fill(v.begin(), v.end(), 0.0);
  }
  for (const auto& e : edges) {
    const auto& p = products.at(e.product);
    auto& q = queries.at(e.query);
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] += e.clicks * p[i];
    }
  }
  for (auto& [_, v] : queries) {
    normalize(v);
  }
}

void regress_ngram_weights(std::span<const RegressionSample> samples,
                           const std::map<std::string, Vector, std::less<>>& ngram_vectors,
                           std::map<std::string, double, std::less<>>& weights, double learning_rate,
                           std::size_t epochs, Rng& rng) {
  const std::size_t dim = ngram_vectors.empty() ? 0 : ngram_vectors.begin()->second.size();
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  Vector residual(dim);
  std::vector<double> steps;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (auto idx : order) {
      const auto& [target, grams] = samples[idx];
      residual = target;
      for (const auto& g : grams) {
        const double w = weights.at(g);
        const auto& gv = ngram_vectors.at(g);
        for (std::size_t i = 0; i < dim; ++i) {
          residual[i] -= w * gv[i];
        }
      }
      steps.clear();
      for (const auto& g : grams) {
        steps.push_back(2.0 * learning_rate * dot(residual, ngram_vectors.at(g)));
      }
      for (std::size_t k = 0; k < grams.size(); ++k) {
        weights.at(grams[k]) += steps[k];
      }
    }
  }
}

VpcgModel vpcg_fit(std::span<const ClickEdge> edges, const VpcgConfig& cfg, std::size_t* dropped) {
  if (cfg.dim == 0) {
    throw std::invalid_argument("vpcg_fit: dimension must be positive");
  }
  std::vector<ClickEdge> kept;
  std::size_t skipped = 0;
  for (const auto& e : edges) {
    if (e.query.empty() || e.product.empty() || !(e.clicks > 0.0)) {
      ++skipped;
      continue;
    }
    kept.push_back(e);
  }
  if (dropped) {
    *dropped = skipped;
  }
  if (kept.empty()) {
    throw std::invalid_argument("vpcg_fit: click graph has no usable edges");
  }

  VpcgModel m;
  m.dim = cfg.dim;
  Rng rng(cfg.seed);
  for (const auto& e : kept) {
    m.query_vectors.try_emplace(e.query);
    m.product_vectors.try_emplace(e.product, Vector(cfg.dim, 0.0));
  }
  for (auto& [_, v] : m.query_vectors) {
    v.resize(cfg.dim);
    for (auto& x : v) {
      x = rng.uniform(-1.0, 1.0);
    }
    normalize(v);
  }

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto before = m.query_vectors;
    vpcg_sweep(kept, m.query_vectors, m.product_vectors);
    ++m.sweeps;
    double moved = 0.0;
    for (const auto& [key, v] : m.query_vectors) {
      const auto& old = before.at(key);
      for (std::size_t i = 0; i < v.size(); ++i) {
        moved = std::max(moved, std::abs(v[i] - old[i]));
      }
    }
    if (moved <= cfg.tolerance) {
      break;
    }
  }

  std::map<std::string, double> query_clicks;
  for (const auto& e : kept) {
    query_clicks[e.query] += e.clicks;
  }
  std::map<std::string, double> ngram_mass;
  std::vector<std::pair<const Vector*, std::vector<std::string>>> samples;
  for (const auto& [query, v] : m.query_vectors) {
    const double c = query_clicks.at(query);
    auto grams = query_ngrams(split_spaces(query));
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (const auto& g : grams) {
      auto& gv = m.ngram_vectors[g];
      gv.resize(cfg.dim, 0.0);
      for (std::size_t i = 0; i < cfg.dim; ++i) {
        gv[i] += c * v[i];
      }
      ngram_mass[g] += c;
    }
    samples.emplace_back(&v, std::move(grams));
  }
  for (auto& [g, v] : m.ngram_vectors) {
    for (auto& x : v) {
      x /= ngram_mass.at(g);
    }
    m.ngram_weights[g] = 0.0;
  }

  std::vector<RegressionSample> regression;
  for (const auto& [target, grams] : samples) {
    regression.push_back({*target, grams});
  }
  regress_ngram_weights(regression, m.ngram_vectors, m.ngram_weights, cfg.learning_rate, cfg.sgd_epochs, rng);
  for (const auto& [g, w] : m.ngram_weights) {
    if (!std::isfinite(w)) {
      throw TrainingDiverged("vpcg_fit: weight of '" + g + "' is not finite", cfg.sgd_epochs);
    }
  }
  return m;
}

double VpcgModel::term_weight(std::string_view term) const {
  const auto it = ngram_weights.find(term);
  return it == ngram_weights.end() ? 0.0 : it->second;
}

std::vector<double> VpcgModel::weigh(std::span<const std::string> terms) const {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    out.push_back(term_weight(t));
  }
  return out;
}

Vector VpcgModel::generate(std::span<const std::string> terms) const {
  Vector v(dim, 0.0);
  for (const auto& g : query_ngrams(terms)) {
    const auto vec = ngram_vectors.find(g);
    if (vec == ngram_vectors.end()) {
      continue;
    }
    const double w = ngram_weights.at(g);
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] += w * vec->second[i];
    }
  }
  return v;
}

double VpcgModel::score(std::span<const std::string> terms, const std::string& product) const {
  const auto p = product_vectors.find(product);
  if (p == product_vectors.end()) {
    return 0.0;
  }
  Vector v = generate(terms);
  normalize(v);
  return dot(v, p->second);
}

// --- persistence ------------------------------------------------------------

json ftw_to_json(const FtwModel& m) {
  json j = model_envelope("ftw");
  json counts = json::object();
  for (const auto& [term, c] : m.counts) {
    counts[term] = {c.retained, c.occurred};
  }
  j["counts"] = std::move(counts);
  return j;
}

FtwModel ftw_from_json(const json& j) {
  check_envelope(j, "ftw");
  try {
    FtwModel m;
    for (const auto& [term, c] : j.at("counts").items()) {
      RetentionCount rc{c.at(0).get<std::uint64_t>(), c.at(1).get<std::uint64_t>()};
      if (rc.retained > rc.occurred) {
        throw SchemaError("ftw: retained count exceeds occurrences for '" + term + "'");
      }
      m.counts.emplace(term, rc);
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed ftw model: ") + e.what());
  }
}

json fqr_to_json(const FqrModel& m) {
  json j = model_envelope("fqr");
  j["occurrences"] = m.occurrences;
  j["cooccurrence"] = m.cooccurrence;
  return j;
}

FqrModel fqr_from_json(const json& j) {
  check_envelope(j, "fqr");
  try {
    FqrModel m;
    for (const auto& [term, c] : j.at("occurrences").items()) {
      m.occurrences.emplace(term, c.get<std::uint64_t>());
    }
    for (const auto& [term, row] : j.at("cooccurrence").items()) {
      m.cooccurrence.emplace(term, row.get<std::map<std::string, std::uint64_t>>());
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed fqr model: ") + e.what());
  }
}

json tfidf_to_json(const TfidfModel& m) {
  json j = model_envelope("tfidf");
  j["documents"] = m.documents;
  j["df"] = m.df;
  return j;
}

TfidfModel tfidf_from_json(const json& j) {
  check_envelope(j, "tfidf");
  try {
    TfidfModel m;
    m.documents = j.at("documents").get<std::uint64_t>();
    for (const auto& [term, c] : j.at("df").items()) {
      m.df.emplace(term, c.get<std::uint64_t>());
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed tfidf model: ") + e.what());
  }
}

json vpcg_to_json(const VpcgModel& m) {
  json j = model_envelope("vpcg");
  j["dim"] = m.dim;
  j["sweeps"] = m.sweeps;
  j["query_vectors"] = m.query_vectors;
  j["product_vectors"] = m.product_vectors;
  j["ngram_vectors"] = m.ngram_vectors;
  j["ngram_weights"] = m.ngram_weights;
  return j;
}

VpcgModel vpcg_from_json(const json& j) {
  check_envelope(j, "vpcg");
  try {
    VpcgModel m;
    m.dim = j.at("dim").get<std::size_t>();
    m.sweeps = j.at("sweeps").get<std::size_t>();
    auto load = [&](const char* key, std::map<std::string, Vector, std::less<>>& out) {
      for (const auto& [name, v] : j.at(key).items()) {
        auto vec = v.get<Vector>();
        if (vec.size() != m.dim) {
          throw SchemaError(std::string("vpcg: ") + key + " entry '" + name + "' has the wrong dimension");
        }
        out.emplace(name, std::move(vec));
      }
    };
    load("query_vectors", m.query_vectors);
    load("product_vectors", m.product_vectors);
    load("ngram_vectors", m.ngram_vectors);
    for (const auto& [g, w] : j.at("ngram_weights").items()) {
      m.ngram_weights.emplace(g, w.get<double>());
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed vpcg model: ") + e.what());
  }
}

}  // namespace qintent
