#pragma once

#include <algorithm>
#include <cmath>

#include "qintent/tensor.hpp"

namespace qintent {

inline constexpr double kProbabilityFloor = 1e-7;

/// −[y log p + (1−y) log(1−p)] with p clamped to [1e-7, 1−1e-7].
inline double binary_cross_entropy(double s, double y) {
  const double p = std::clamp(s, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

struct BceTerm {
  double loss = 0.0;
  double dlogit = 0.0;
};

/// Loss of sigmoid(a) against label y and its exact derivative with respect
/// to a, including the flat regions introduced by both clamps.
inline BceTerm bce_from_logit(double a, double y) {
  const double s = sigmoid(a);
  const bool flat = a < -30.0 || a > 30.0 || s < kProbabilityFloor || s > 1.0 - kProbabilityFloor;
  return {binary_cross_entropy(s, y), flat ? 0.0 : s - y};
}

}  // namespace qintent
