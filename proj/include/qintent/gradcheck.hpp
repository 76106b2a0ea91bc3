#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qintent/params.hpp"
#include "qintent/rng.hpp"

namespace qintent {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Coordinates sampled per tensor class; classes smaller than this are
  /// checked exhaustively. The budget is split evenly over the class's
  /// tensors.
  std::size_t samples_per_class = 200;
  /// Maps a tensor name to its class. Unset means one class per tensor.
  std::function<std::string(const std::string&)> tensor_class;
};

struct TensorGradCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double analytic_at_max = 0.0;
  double numeric_at_max = 0.0;
};

struct GradCheckReport {
  std::vector<TensorGradCheck> tensors;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  double tolerance = 0.0;

  bool passed() const { return max_relative_error < tolerance; }
};

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares `grads` (aligned with `params`) against central differences of
/// `loss`. `loss` must be deterministic; parameters are restored exactly.
GradCheckReport finite_diff_check(const std::function<long double()>& loss, const ParamList& params,
                                  const ParamList& grads, Rng& rng, GradCheckOptions options = {});

/// As above for a loss given as a sum of terms. The difference of the two
/// evaluations is taken term by term before summing.
GradCheckReport finite_diff_check(const std::function<std::vector<long double>()>& loss_terms,
                                  const ParamList& params, const ParamList& grads, Rng& rng,
                                  GradCheckOptions options = {});

}  // namespace qintent
