#pragma once

#include <cstddef>
#include <vector>

#include "qintent/rng.hpp"
#include "qintent/tensor.hpp"

namespace qintent {

enum class Mode { train, eval };

/// Per-element multipliers for inverted dropout: 0 with probability `rate`,
/// 1/(1-rate) otherwise. In eval mode, or with rate 0, every factor is 1 and
/// no random numbers are drawn.
std::vector<double> dropout_mask(std::size_t n, double rate, Mode mode, Rng& rng);

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng);

void check_dropout_rate(double rate);

}  // namespace qintent
