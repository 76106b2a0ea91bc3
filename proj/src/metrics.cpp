#include "qintent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace qintent {

double reciprocal_rank(std::span<const std::string> ranked, const std::string& relevant) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i] == relevant) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

double mrr_ratio(std::span<const double> boosted, std::span<const double> unboosted) {
  if (boosted.size() != unboosted.size() || boosted.empty()) {
    throw std::invalid_argument("mrr_ratio: columns must be non-empty and of equal length");
  }
  const double num = std::accumulate(boosted.begin(), boosted.end(), 0.0);
  const double den = std::accumulate(unboosted.begin(), unboosted.end(), 0.0);
  if (den == 0.0) {
    throw std::domain_error("mrr_ratio: unboosted MRR is zero");
  }
  return num / den;
}

std::size_t nnz(const std::set<std::string>& truth, const StopWords& stopwords) {
  return static_cast<std::size_t>(
      std::count_if(truth.begin(), truth.end(), [&](const std::string& t) { return !stopwords.contains(t); }));
}

std::optional<double> precision_at_k(std::span<const std::string> predicted, const std::set<std::string>& truth,
                                     std::size_t k, const StopWords& stopwords) {
  if (k == 0) {
    throw std::invalid_argument("precision_at_k: k must be at least 1");
  }
  if (nnz(truth, stopwords) == 0) {
    return std::nullopt;
  }
  std::size_t taken = 0;
  std::size_t hits = 0;
  for (const auto& term : predicted) {
    if (taken == k) {
      break;
    }
    if (stopwords.contains(term)) {
      continue;
    }
    ++taken;
    hits += truth.contains(term) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::set<std::string> retained_terms(std::span<const std::string> q, std::span<const std::string> rq) {
  const std::set<std::string> target(rq.begin(), rq.end());
  std::set<std::string> out;
  for (const auto& t : q) {
    if (target.contains(t)) {
      out.insert(t);
    }
  }
  return out;
}

std::vector<std::string> rank_terms_by_weight(std::span<const std::string> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) {
    throw std::invalid_argument("rank_terms_by_weight: " + std::to_string(weights.size()) + " weights for " +
                                std::to_string(terms.size()) + " terms");
  }
  struct Entry {
    std::string term;
    double weight;
    std::size_t first;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    auto [it, inserted] = slot.emplace(terms[i], entries.size());
    if (inserted) {
      entries.push_back({terms[i], weights[i], i});
    } else {
      entries[it->second].weight = std::max(entries[it->second].weight, weights[i]);
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.weight != b.weight ? a.weight > b.weight : a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (auto& e : entries) {
    out.push_back(std::move(e.term));
  }
  return out;
}

std::optional<PrecisionRow> PrecisionAccumulator::add(std::span<const std::string> predicted,
                                                      const std::set<std::string>& truth) {
  const std::size_t k = nnz(truth, stopwords_);
  if (k == 0) {
    ++skipped_;
    return std::nullopt;
  }
  PrecisionRow row;
  row.nnz = k;
  row.p1 = *precision_at_k(predicted, truth, 1, stopwords_);
  row.p2 = *precision_at_k(predicted, truth, 2, stopwords_);
  row.p3 = *precision_at_k(predicted, truth, 3, stopwords_);
  row.p_nnz = *precision_at_k(predicted, truth, k, stopwords_);
  rows_.push_back(row);
  return row;
}

PrecisionSummary PrecisionAccumulator::summary() const {
  PrecisionSummary s;
  s.evaluated = rows_.size();
  s.skipped = skipped_;
  if (rows_.empty()) {
    return s;
  }
  for (const auto& r : rows_) {
    s.ap1 += r.p1;
    s.ap2 += r.p2;
    s.ap3 += r.p3;
    s.ap_nnz += r.p_nnz;
  }
  const auto n = static_cast<double>(rows_.size());
  s.ap1 /= n;
  s.ap2 /= n;
  s.ap3 /= n;
  s.ap_nnz /= n;
  return s;
}

namespace {

/// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) {
    d = kTiny;
  }
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    d = std::abs(d) < kTiny ? kTiny : d;
    c = 1.0 + aa / c;
    c = std::abs(c) < kTiny ? kTiny : c;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    d = std::abs(d) < kTiny ? kTiny : d;
    c = 1.0 + aa / c;
    c = std::abs(c) < kTiny ? kTiny : c;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      return h;
    }
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("regularized_incomplete_beta: requires a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) {
    return x;
  }
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) {
    throw std::domain_error("student_t_two_sided_p: dof must be positive");
  }
  if (std::isinf(t)) {
    return 0.0;
  }
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("paired_t_test: samples of length " + std::to_string(x.size()) + " and " +
                                std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw std::invalid_argument("paired_t_test: at least two pairs are required");
  }
  const auto n = static_cast<double>(x.size());
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = x[i] - y[i];
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) {
    ss += (v - mean) * (v - mean);
  }
  TTestResult r;
  r.dof = n - 1.0;
  if (ss == 0.0) {
    if (mean == 0.0) {
      return r;
    }
    throw std::domain_error("paired_t_test: constant non-zero differences have no variance");
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

std::vector<double> normalize_for_display(std::span<const double> weights) {
  double max = -std::numeric_limits<double>::infinity();
  for (double w : weights) {
    max = std::max(max, w);
  }
  if (weights.empty() || !(max > 0.0)) {
    throw std::domain_error("normalize_for_display: no positive weight");
  }
  std::vector<double> out(weights.begin(), weights.end());
  for (auto& w : out) {
    w /= max;
  }
  return out;
}

}  // namespace qintent
