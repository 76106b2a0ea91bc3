#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qintent/vocabulary.hpp"

namespace qintent {

/// 1/position of `relevant` in `ranked`, 0 when absent.
double reciprocal_rank(std::span<const std::string> ranked, const std::string& relevant);

/// mean(boosted) / mean(unboosted). Rejects a zero denominator and columns
/// of different length.
double mrr_ratio(std::span<const double> boosted, std::span<const double> unboosted);

/// Number of non-stop terms in `truth`.
std::size_t nnz(const std::set<std::string>& truth, const StopWords& stopwords);

/// |top-k ∩ truth| / k after removing stop words from both the prediction
/// ranking and the truth. Returns nullopt when the filtered truth is empty.
std::optional<double> precision_at_k(std::span<const std::string> predicted, const std::set<std::string>& truth,
                                     std::size_t k, const StopWords& stopwords);

/// Terms of q retained in R(q): the term-weighting ground truth.
std::set<std::string> retained_terms(std::span<const std::string> q, std::span<const std::string> rq);

/// Distinct terms of q ordered by their largest positional weight; ties go
/// to the earlier first occurrence.
std::vector<std::string> rank_terms_by_weight(std::span<const std::string> terms, std::span<const double> weights);

/// P@1, P@2, P@3 and P@nnz for one instance.
struct PrecisionRow {
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double p_nnz = 0.0;
  std::size_t nnz = 0;
};

struct PrecisionSummary {
  double ap1 = 0.0;
  double ap2 = 0.0;
  double ap3 = 0.0;
  double ap_nnz = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Collects per-instance precision rows; instances whose filtered truth is
/// empty are counted as skipped.
class PrecisionAccumulator {
public:
  explicit PrecisionAccumulator(StopWords stopwords) : stopwords_(std::move(stopwords)) {}

  /// Returns the row, or nullopt when the instance was skipped.
  std::optional<PrecisionRow> add(std::span<const std::string> predicted, const std::set<std::string>& truth);

  const std::vector<PrecisionRow>& rows() const { return rows_; }
  std::size_t skipped() const { return skipped_; }
  PrecisionSummary summary() const;

private:
  StopWords stopwords_;
  std::vector<PrecisionRow> rows_;
  std::size_t skipped_ = 0;
};

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

/// Paired two-sided t-test on d = x − y. When every difference is equal the
/// test is undefined unless the mean difference is zero, which yields t = 0,
/// p = 1.
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with `dof`
/// degrees of freedom.
double student_t_two_sided_p(double t, double dof);

/// Divides by the maximum weight. Rejects inputs without a positive weight.
std::vector<double> normalize_for_display(std::span<const double> weights);

}  // namespace qintent
