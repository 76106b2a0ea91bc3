#include "qintent/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qintent {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string render(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        line += row[c] + std::string(width[c] - row[c].size(), ' ');
      } else {
        line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') {
      line.pop_back();
    }
    out << line << '\n';
  }
  return out.str();
}

json precision_json(const PrecisionRow& p) {
  return {{"p1", p.p1}, {"p2", p.p2}, {"p3", p.p3}, {"p_nnz", p.p_nnz}, {"nnz", p.nnz}};
}

ModelEval finish_precision(std::span<const ReformulationPair> pairs, PrecisionAccumulator& acc,
                           const std::vector<std::optional<PrecisionRow>>& rows, std::string model) {
  ModelEval m;
  m.model = std::move(model);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EvalRow r;
    r.q = pairs[i].q.raw;
    r.rq = pairs[i].rq.raw;
    r.skipped = !rows[i].has_value();
    if (rows[i]) {
      r.precision = *rows[i];
    }
    m.rows.push_back(std::move(r));
  }
  m.summary = acc.summary();
  return m;
}

std::vector<double> p_nnz_column(const ModelEval& m) {
  std::vector<double> out;
  for (const auto& r : m.rows) {
    if (!r.skipped) {
      out.push_back(r.precision.p_nnz);
    }
  }
  return out;
}

}  // namespace

ModelEval evaluate_weighting(std::span<const ReformulationPair> pairs, const WeightFn& weigh,
                             const StopWords& stopwords, std::string model) {
  PrecisionAccumulator acc(stopwords);
  std::vector<std::optional<PrecisionRow>> rows;
  for (const auto& pair : pairs) {
    const auto q_tokens = tokenize_text(pair.q.raw);
    const auto rq_tokens = tokenize_text(pair.rq.raw);
    const auto weights = weigh(pair);
    if (weights.size() != q_tokens.size()) {
      throw std::invalid_argument("evaluate_weighting: " + std::to_string(weights.size()) + " weights for '" +
                                  pair.q.raw + "'");
    }
    rows.push_back(acc.add(rank_terms_by_weight(q_tokens, weights), retained_terms(q_tokens, rq_tokens)));
  }
  return finish_precision(pairs, acc, rows, std::move(model));
}

ModelEval evaluate_refinement(std::span<const ReformulationPair> pairs, const RefineFn& refine,
                              const StopWords& stopwords, std::string model) {
  PrecisionAccumulator acc(stopwords);
  std::vector<std::optional<PrecisionRow>> rows;
  for (const auto& pair : pairs) {
    const auto rq_tokens = tokenize_text(pair.rq.raw);
    const std::set<std::string> truth(rq_tokens.begin(), rq_tokens.end());
    rows.push_back(acc.add(refine(pair), truth));
  }
  return finish_precision(pairs, acc, rows, std::move(model));
}

ModelEval evaluate_ranking(std::span<const ReformulationPair> pairs, const Bm25fIndex& index, const WeightFn& weigh,
                           std::string model, std::size_t depth) {
  ModelEval m;
  m.model = std::move(model);
  std::vector<double> unboosted;
  std::vector<double> boosted;
  std::vector<std::string> ids;
  auto rr = [&](const std::vector<RankedProduct>& ranked, const std::string& relevant) {
    ids.clear();
    for (const auto& r : ranked) {
      ids.push_back(r.product);
    }
    return reciprocal_rank(ids, relevant);
  };
  for (const auto& pair : pairs) {
    if (!pair.product || !index.find_product(*pair.product)) {
      ++m.ranking_skipped;
      continue;
    }
    const auto terms = tokenize_text(pair.q.raw);
    const auto weights = weigh(pair);
    if (weights.size() != terms.size()) {
      throw std::invalid_argument("evaluate_ranking: " + std::to_string(weights.size()) + " weights for '" +
                                  pair.q.raw + "'");
    }
    RankingRow row;
    row.q = pair.q.raw;
    row.product = *pair.product;
    row.rr_unboosted = rr(rank(terms, index, std::nullopt, depth), *pair.product);
    row.rr_boosted = rr(rank(terms, index, std::span<const double>(weights), depth), *pair.product);
    unboosted.push_back(row.rr_unboosted);
    boosted.push_back(row.rr_boosted);
    m.ranking.push_back(std::move(row));
  }
  if (m.ranking.empty()) {
    throw std::invalid_argument("evaluate_ranking: no pair has a product in the index");
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
      s += x;
    }
    return s / static_cast<double>(v.size());
  };
  m.mrr_bm25f = mean(unboosted);
  m.mrr_boost = mean(boosted);
  m.mrr_ratio = mrr_ratio(boosted, unboosted);
  return m;
}

std::vector<double> oracle_weights(const ReformulationPair& pair) {
  const auto rq_tokens = tokenize_text(pair.rq.raw);
  const std::set<std::string> target(rq_tokens.begin(), rq_tokens.end());
  std::vector<double> out;
  for (const auto& t : tokenize_text(pair.q.raw)) {
    out.push_back(target.contains(t) ? 1.0 : 0.0);
  }
  return out;
}

void add_significance_tests(EvalReport& report, double alpha) {
  if (report.task == "ranking") {
    for (const auto& m : report.models) {
      std::vector<double> boosted;
      std::vector<double> unboosted;
      for (const auto& r : m.ranking) {
        boosted.push_back(r.rr_boosted);
        unboosted.push_back(r.rr_unboosted);
      }
      report.tests.push_back({m.model + " boosted vs bm25f", paired_t_test(boosted, unboosted), alpha});
    }
    return;
  }
  if (report.models.size() < 2) {
    return;
  }
  const auto& base = report.models.front();
  const auto x = p_nnz_column(base);
  for (std::size_t i = 1; i < report.models.size(); ++i) {
    const auto& other = report.models[i];
    if (other.rows.size() != base.rows.size()) {
      throw std::invalid_argument("add_significance_tests: models were evaluated on different pairs");
    }
    for (std::size_t k = 0; k < base.rows.size(); ++k) {
      if (base.rows[k].skipped != other.rows[k].skipped) {
        throw std::invalid_argument("add_significance_tests: skipped instances differ between models");
      }
    }
    report.tests.push_back({base.model + " vs " + other.model + " P@nnz", paired_t_test(x, p_nnz_column(other)),
                            alpha});
  }
}

json EvalReport::to_json() const {
  json models_json = json::array();
  for (const auto& m : models) {
    json mj = {{"model", m.model}};
    if (task == "ranking") {
      json rows = json::array();
      for (const auto& r : m.ranking) {
        rows.push_back({{"q", r.q}, {"product", r.product}, {"rr_bm25f", r.rr_unboosted}, {"rr_boost", r.rr_boosted}});
      }
      mj["rows"] = std::move(rows);
      mj["skipped"] = m.ranking_skipped;
      mj["aggregates"] = {{"mrr_bm25f", m.mrr_bm25f}, {"mrr_boost", m.mrr_boost}, {"mrr_ratio", m.mrr_ratio}};
    } else {
      json rows = json::array();
      for (const auto& r : m.rows) {
        json rj = {{"q", r.q}, {"rq", r.rq}, {"skipped", r.skipped}};
        if (!r.skipped) {
          rj.update(precision_json(r.precision));
        }
        rows.push_back(std::move(rj));
      }
      mj["rows"] = std::move(rows);
      mj["skipped"] = m.summary.skipped;
      mj["aggregates"] = {{"ap1", m.summary.ap1},
                          {"ap2", m.summary.ap2},
                          {"ap3", m.summary.ap3},
                          {"ap_nnz", m.summary.ap_nnz},
                          {"evaluated", m.summary.evaluated}};
    }
    models_json.push_back(std::move(mj));
  }
  json tests_json = json::array();
  for (const auto& t : tests) {
    tests_json.push_back({{"name", t.name},
                          {"t", t.result.t},
                          {"dof", t.result.dof},
                          {"p", t.result.p},
                          {"alpha", t.alpha},
                          {"passed", t.passed()}});
  }
  return {{"task", task}, {"models", std::move(models_json)}, {"tests", std::move(tests_json)}};
}

std::string EvalReport::table() const {
  std::vector<std::vector<std::string>> cells;
  if (task == "ranking") {
    cells.push_back({"model", "MRR_BM25F", "MRR_boost", "MRR_ratio", "queries", "skipped"});
    for (const auto& m : models) {
      cells.push_back({m.model, fixed(m.mrr_bm25f), fixed(m.mrr_boost), fixed(m.mrr_ratio),
                       std::to_string(m.ranking.size()), std::to_string(m.ranking_skipped)});
    }
  } else {
    cells.push_back({"model", "AP@1", "AP@2", "AP@3", "AP@nnz", "evaluated", "skipped"});
    for (const auto& m : models) {
      cells.push_back({m.model, fixed(m.summary.ap1), fixed(m.summary.ap2), fixed(m.summary.ap3),
                       fixed(m.summary.ap_nnz), std::to_string(m.summary.evaluated),
                       std::to_string(m.summary.skipped)});
    }
  }
  std::string out = task + "\n" + render(cells);
  if (!tests.empty()) {
    std::vector<std::vector<std::string>> t{{"test", "t", "dof", "p", "alpha", "result"}};
    for (const auto& r : tests) {
      t.push_back({r.name, fixed(r.result.t, 3), fixed(r.result.dof, 0), sci(r.result.p), fixed(r.alpha, 3),
                   r.passed() ? "significant" : "not significant"});
    }
    out += "\n" + render(t);
  }
  return out;
}

}  // namespace qintent
