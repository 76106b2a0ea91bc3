#include "qintent/dropout.hpp"

#include <stdexcept>
#include <string>

namespace qintent {

void check_dropout_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

std::vector<double> dropout_mask(std::size_t n, double rate, Mode mode, Rng& rng) {
  check_dropout_rate(rate);
  std::vector<double> mask(n, 1.0);
  if (mode == Mode::eval || rate == 0.0) {
    return mask;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) {
    m = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
  const auto mask = dropout_mask(x.size(), rate, mode, rng);
  Tensor out = x;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= mask[i];
  }
  return out;
}

}  // namespace qintent
